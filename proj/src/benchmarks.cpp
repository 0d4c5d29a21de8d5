#include "dela/benchmarks.hpp"

#include <cmath>
#include <memory>
#include <sstream>

#include "dela/linalg.hpp"

namespace dela::benchmarks {

namespace {

using M = HLPLabel::Multimodality;
using G = HLPLabel::GlobalStructure;
using F = HLPLabel::Funnel;

// Table of high-level properties per function, fid 1..24.
const HLPLabel kLabels[24] = {
    {M::none, G::none, F::yes},      // 1 Sphere
    {M::none, G::none, F::yes},      // 2 Ellipsoidal separable
    {M::high, G::strong, F::yes},    // 3 Rastrigin separable
    {M::high, G::strong, F::yes},    // 4 Bueche-Rastrigin
    {M::none, G::none, F::yes},      // 5 Linear Slope
    {M::none, G::none, F::yes},      // 6 Attractive Sector
    {M::none, G::none, F::yes},      // 7 Step Ellipsoidal
    {M::low, G::none, F::yes},       // 8 Rosenbrock
    {M::low, G::none, F::yes},       // 9 Rosenbrock rotated
    {M::none, G::none, F::yes},      // 10 Ellipsoidal high conditioned
    {M::none, G::none, F::yes},      // 11 Discus
    {M::none, G::none, F::yes},      // 12 Bent Cigar
    {M::none, G::none, F::yes},      // 13 Sharp Ridge
    {M::none, G::none, F::yes},      // 14 Different Powers
    {M::high, G::strong, F::yes},    // 15 Rastrigin multimodal
    {M::high, G::med, F::none},      // 16 Weierstrass
    {M::high, G::med, F::yes},       // 17 Schaffer F7
    {M::high, G::med, F::yes},       // 18 Schaffer F7 ill-conditioned
    {M::high, G::strong, F::yes},    // 19 Griewank-Rosenbrock
    {M::med, G::deceptive, F::yes},  // 20 Schwefel
    {M::med, G::none, F::none},      // 21 Gallagher 101 Peaks
    {M::low, G::none, F::none},      // 22 Gallagher 21 Peaks
    {M::high, G::none, F::none},     // 23 Katsuura
    {M::high, G::weak, F::yes},      // 24 Lunacek bi-Rastrigin
};

const char* kNames[24] = {
    "Sphere",
    "Ellipsoidal separable",
    "Rastrigin separable",
    "Bueche-Rastrigin",
    "Linear Slope",
    "Attractive Sector",
    "Step Ellipsoidal",
    "Rosenbrock",
    "Rosenbrock rotated",
    "Ellipsoidal high conditioned",
    "Discus",
    "Bent Cigar",
    "Sharp Ridge",
    "Different Powers",
    "Rastrigin multimodal",
    "Weierstrass",
    "Schaffer F7",
    "Schaffer F7 moderately ill-conditioned",
    "Griewank-Rosenbrock",
    "Schwefel",
    "Gallagher 101 Peaks",
    "Gallagher 21 Peaks",
    "Katsuura",
    "Lunacek bi-Rastrigin",
};

double cond_exp(int i, int d, double power) {
  // 10^(power * i / (d-1)), guarded for d == 1
  return d > 1 ? std::pow(10.0, power * i / (d - 1)) : 1.0;
}

// Peaks for the Gallagher families, drawn from the instance seed.
struct GallagherPeaks {
  Matrix locations;  // npeaks x d
  Vector heights;
  Vector widths;
};

GallagherPeaks make_peaks(int npeaks, int d, Rng& rng) {
  GallagherPeaks p;
  p.locations.resize(npeaks, d);
  p.heights.resize(npeaks);
  p.widths.resize(npeaks);
  for (int q = 0; q < npeaks; ++q) {
    for (int j = 0; j < d; ++j)
      p.locations(q, j) = rng.uniform(q == 0 ? -4.0 : -4.9, q == 0 ? 4.0 : 4.9);
    p.heights[q] = q == 0 ? 10.0 : 1.1 + 8.0 * (q - 1) / std::max(1, npeaks - 2);
    p.widths[q] = q == 0 ? 1.0 : std::pow(10.0, rng.uniform(0.0, 2.0)) / 2.0;
  }
  return p;
}

// Raw function families in transformed coordinates z. Each returns the value
// and exposes its raw optimum location z_star (empty when untracked).
struct RawFunction {
  std::function<double(const Vector&)> f;
  Vector z_star;
};

RawFunction make_raw(int fid, int d, Rng& inst_rng) {
  RawFunction r;
  r.z_star = Vector::Zero(d);
  switch (fid) {
    case 1:
      r.f = [](const Vector& z) { return z.squaredNorm(); };
      break;
    case 2:
    case 10:
      r.f = [d](const Vector& z) {
        double s = 0;
        for (int i = 0; i < d; ++i) s += cond_exp(i, d, 6.0) * z[i] * z[i];
        return s;
      };
      break;
    case 3:
    case 15:
      r.f = [d](const Vector& z) {
        double c = 0;
        for (int i = 0; i < d; ++i) c += std::cos(2 * M_PI * z[i]);
        return 10.0 * (d - c) + z.squaredNorm();
      };
      break;
    case 4:
      r.f = [d](const Vector& z) {
        double c = 0, q = 0;
        for (int i = 0; i < d; ++i) {
          double s = cond_exp(i, d, 0.5);
          if (z[i] > 0 && i % 2 == 0) s *= 10.0;
          double v = s * z[i];
          c += std::cos(2 * M_PI * v);
          q += v * v;
        }
        return 10.0 * (d - c) + q;
      };
      break;
    case 5:
      r.f = [d](const Vector& z) {
        double s = 0;
        for (int i = 0; i < d; ++i) {
          double si = cond_exp(i, d, 1.0);
          double zi = std::min(z[i], 5.0);  // plateau beyond the optimum edge
          s += 5.0 * si - si * zi;
        }
        return s;
      };
      r.z_star = Vector::Constant(d, 5.0);
      break;
    case 6:
      r.f = [](const Vector& z) {
        double s = 0;
        for (int i = 0; i < z.size(); ++i) {
          double si = z[i] > 0 ? 100.0 : 1.0;
          s += si * si * z[i] * z[i];
        }
        return std::pow(s, 0.9);
      };
      break;
    case 7:
      r.f = [d](const Vector& z) {
        double s = 0;
        for (int i = 0; i < d; ++i) {
          double zt = std::floor(0.5 + z[i]);
          s += cond_exp(i, d, 2.0) * zt * zt;
        }
        return 0.1 * std::max(std::abs(z[0]) * 1e-4, s);
      };
      break;
    case 8:
    case 9:
      r.f = [d](const Vector& z) {
        double s = 0;
        for (int i = 0; i + 1 < d; ++i) {
          double a = z[i] * z[i] - z[i + 1];
          double b = z[i] - 1.0;
          s += 100.0 * a * a + b * b;
        }
        return s;
      };
      r.z_star = Vector::Constant(d, 1.0);
      break;
    case 11:
      r.f = [](const Vector& z) {
        double s = 1e6 * z[0] * z[0];
        for (int i = 1; i < z.size(); ++i) s += z[i] * z[i];
        return s;
      };
      break;
    case 12:
      r.f = [](const Vector& z) {
        double s = z[0] * z[0];
        for (int i = 1; i < z.size(); ++i) s += 1e6 * z[i] * z[i];
        return s;
      };
      break;
    case 13:
      r.f = [](const Vector& z) {
        double tail = 0;
        for (int i = 1; i < z.size(); ++i) tail += z[i] * z[i];
        return z[0] * z[0] + 100.0 * std::sqrt(tail);
      };
      break;
    case 14:
      r.f = [d](const Vector& z) {
        double s = 0;
        for (int i = 0; i < d; ++i)
          s += std::pow(std::abs(z[i]), 2.0 + (d > 1 ? 4.0 * i / (d - 1) : 0.0));
        return std::sqrt(s);
      };
      break;
    case 16:
      r.f = [d](const Vector& z) {
        constexpr int kTerms = 12;
        double f0 = 0;
        for (int k = 0; k < kTerms; ++k)
          f0 += std::pow(0.5, k) * std::cos(M_PI * std::pow(3.0, k));
        double s = 0;
        for (int i = 0; i < d; ++i)
          for (int k = 0; k < kTerms; ++k)
            s += std::pow(0.5, k) *
                 std::cos(2 * M_PI * std::pow(3.0, k) * (z[i] + 0.5));
        return 10.0 * std::pow(std::abs(s / d - f0), 3.0);
      };
      break;
    case 17:
    case 18:
      r.f = [d, fid](const Vector& z) {
        double acc = 0;
        for (int i = 0; i + 1 < d; ++i) {
          double a = fid == 18 ? cond_exp(i, d, 1.5) * z[i] : z[i];
          double b = fid == 18 ? cond_exp(i + 1, d, 1.5) * z[i + 1] : z[i + 1];
          double s = std::sqrt(a * a + b * b);
          double t = std::sin(50.0 * std::pow(s, 0.2));
          acc += std::sqrt(s) * (1.0 + t * t);
        }
        acc /= std::max(1, d - 1);
        return acc * acc;
      };
      break;
    case 19:
      r.f = [d](const Vector& z) {
        double acc = 0;
        for (int i = 0; i + 1 < d; ++i) {
          double a = z[i] * z[i] - z[i + 1];
          double b = z[i] - 1.0;
          double s = 100.0 * a * a + b * b;
          acc += s / 4000.0 - std::cos(s);
        }
        return 10.0 * acc / std::max(1, d - 1) + 10.0;
      };
      r.z_star = Vector::Constant(d, 1.0);
      break;
    case 20:
      r.f = [d](const Vector& z) {
        double s = 418.9828872724339 * d;
        double pen = 0.0;  // keeps the sine peaks beyond |z|=5 from undercutting z*
        for (int i = 0; i < d; ++i) {
          double v = 100.0 * z[i];
          s -= v * std::sin(std::sqrt(std::abs(v)));
          double excess = std::max(0.0, std::abs(z[i]) - 5.0);
          pen += excess * excess;
        }
        return s / 100.0 + 100.0 * pen;
      };
      r.z_star = Vector::Constant(d, 4.2096874622750365);
      break;
    case 21:
    case 22: {
      auto peaks = std::make_shared<GallagherPeaks>(
          make_peaks(fid == 21 ? 101 : 21, d, inst_rng));
      r.f = [peaks, d](const Vector& z) {
        double best = 0;
        for (int q = 0; q < peaks->heights.size(); ++q) {
          double dist2 = (z - peaks->locations.row(q).transpose()).squaredNorm();
          double v = peaks->heights[q] *
                     std::exp(-peaks->widths[q] * dist2 / (2.0 * d));
          best = std::max(best, v);
        }
        double t = 10.0 - best;
        return t * t;
      };
      r.z_star = peaks->locations.row(0).transpose();
      break;
    }
    case 23:
      r.f = [d](const Vector& z) {
        double prod = 1.0;
        for (int i = 0; i < d; ++i) {
          double s = 0;
          double p2 = 2.0;
          for (int j = 1; j <= 32; ++j) {
            double v = p2 * z[i];
            s += std::abs(v - std::round(v)) / p2;
            p2 *= 2.0;
          }
          prod *= std::pow(1.0 + (i + 1) * s, 10.0 / std::pow(d, 1.2));
        }
        double c = 10.0 / (d * d);
        return c * prod - c;
      };
      break;
    case 24:
      r.f = [d](const Vector& z) {
        const double mu0 = 2.5;
        const double s = 1.0 - 1.0 / (2.0 * std::sqrt(d + 20.0) - 8.2);
        const double mu1 = -std::sqrt((mu0 * mu0 - 1.0) / s);
        double t1 = 0, t2 = 0, c = 0;
        for (int i = 0; i < d; ++i) {
          double w = z[i] + mu0;
          t1 += (w - mu0) * (w - mu0);
          t2 += (w - mu1) * (w - mu1);
          c += std::cos(2 * M_PI * (w - mu0));
        }
        return std::min(t1, d + s * t2) + 10.0 * (d - c);
      };
      break;
    default:
      throw std::invalid_argument("make_benchmark: unknown fid " + std::to_string(fid));
  }
  return r;
}

BenchmarkInstance make_zdt(const std::string& suite) {
  const int d = 2;
  int variant = 0;
  if (suite == "zdt1") variant = 1;
  else if (suite == "zdt2") variant = 2;
  else if (suite == "zdt3") variant = 3;
  else throw std::invalid_argument("make_benchmark: unknown suite " + suite);

  // Decision variables remapped from the [-5,5] box to the native [0,1] cube.
  auto unit = [](double x) { return (x + 5.0) / 10.0; };
  auto g_fn = [unit, d](const Eigen::Ref<const Vector>& x) {
    double s = 0;
    for (int i = 1; i < d; ++i) s += unit(x[i]);
    return 1.0 + 9.0 * s / (d - 1);
  };

  randgen::Objective f1;
  f1.fn = [unit](const Eigen::Ref<const Vector>& x) { return unit(x[0]); };
  randgen::Objective f2;
  f2.fn = [unit, g_fn, variant](const Eigen::Ref<const Vector>& x) {
    double u = unit(x[0]);
    double g = g_fn(x);
    double ratio = u / g;
    switch (variant) {
      case 1: return g * (1.0 - std::sqrt(ratio));
      case 2: return g * (1.0 - ratio * ratio);
      default:
        return g * (1.0 - std::sqrt(ratio) - ratio * std::sin(10.0 * M_PI * u));
    }
  };

  BenchmarkInstance out;
  out.problem.objectives = {f1, f2};
  out.problem.bounds = Box::cube(d, -5.0, 5.0);
  out.problem.d = d;
  out.problem.m = 2;
  out.problem.origin = suite;
  return out;
}

}  // namespace

std::string to_string(HLPLabel::Multimodality v) {
  switch (v) {
    case M::none: return "none";
    case M::low: return "low";
    case M::med: return "med";
    default: return "high";
  }
}

std::string to_string(HLPLabel::GlobalStructure v) {
  switch (v) {
    case G::none: return "none";
    case G::weak: return "weak";
    case G::med: return "med";
    case G::strong: return "strong";
    default: return "deceptive";
  }
}

std::string to_string(HLPLabel::Funnel v) { return v == F::yes ? "yes" : "none"; }

HLPLabel hlp_labels(int fid) {
  if (fid < 1 || fid > 24)
    throw std::out_of_range("hlp_labels: fid must be in 1..24");
  return kLabels[fid - 1];
}

const char* function_name(int fid) {
  if (fid < 1 || fid > 24)
    throw std::out_of_range("function_name: fid must be in 1..24");
  return kNames[fid - 1];
}

BenchmarkInstance make_benchmark(const BenchmarkId& id, int d) {
  if (id.fid == 0) return make_zdt(id.suite);
  if (d != 2 && d != 3 && d != 5 && d != 10)
    throw std::invalid_argument("make_benchmark: unsupported d " + std::to_string(d));

  // Instance transform z = R (x - t); seed 0 keeps the identity instance.
  Rng rng(0x42c0ffee ^ (id.instance_seed * 0x9e3779b97f4a7c15ull + id.fid));
  Matrix rot;
  Vector shift;
  double f_opt;
  if (id.instance_seed == 0) {
    rot = Matrix::Identity(d, d);
    shift = Vector::Zero(d);
    f_opt = 0.0;
  } else {
    rot = random_rotation(d, rng);
    shift = Vector::NullaryExpr(d, [&](Eigen::Index) { return rng.uniform(-4.0, 4.0); });
    f_opt = rng.uniform(-100.0, 100.0);
  }

  RawFunction raw = make_raw(id.fid, d, rng);

  BenchmarkInstance out;
  randgen::Objective obj;
  obj.fn = [rot, shift, f_opt, f = raw.f](const Eigen::Ref<const Vector>& x) {
    Vector z = rot * (x - shift);
    return f(z) + f_opt;
  };
  out.problem.objectives = {std::move(obj)};
  out.problem.bounds = Box::cube(d, -5.0, 5.0);
  out.problem.d = d;
  out.problem.m = 1;
  out.problem.origin = "bbob:f" + std::to_string(id.fid) + ":i" +
                       std::to_string(id.instance_seed);
  out.x_opt = shift + rot.transpose() * raw.z_star;
  out.f_opt = f_opt;
  return out;
}

std::string suite_csv() {
  std::ostringstream out;
  out << "fid,name,multimodality,global_structure,funnel\n";
  for (int fid = 1; fid <= 24; ++fid) {
    HLPLabel l = hlp_labels(fid);
    out << fid << ",\"" << kNames[fid - 1] << "\"," << to_string(l.multimodality) << ","
        << to_string(l.global_structure) << "," << to_string(l.funnel) << "\n";
  }
  return out.str();
}

}  // namespace dela::benchmarks
