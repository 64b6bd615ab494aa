#include "mupo/imm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "mupo/errors.hpp"

namespace mupo::imm {

namespace {

constexpr int kCommon = 4;
constexpr int kPadded = 6;
constexpr double kDeg = geo::kPi / 180.0;

// Index of position/velocity/acceleration of each axis in the padded layout.
constexpr int kPos[2] = {0, 2};
constexpr int kVel[2] = {1, 3};
constexpr int kAcc[2] = {4, 5};

Eigen::VectorXd pad(const Eigen::VectorXd& x) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(kPadded);
  out.head(x.size()) = x;
  return out;
}

Eigen::MatrixXd pad(const Eigen::MatrixXd& P) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(kPadded, kPadded);
  out.topLeftCorner(P.rows(), P.cols()) = P;
  return out;
}

Eigen::MatrixXd position_selector(int dim) {
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, dim);
  H(0, 0) = 1.0;
  H(1, 2) = 1.0;
  return H;
}

void symmetrize(Eigen::MatrixXd& P) { P = 0.5 * (P + P.transpose()).eval(); }

}  // namespace

Eigen::MatrixXd FilterModel::transition(double dt) const {
  const int n = dim();
  Eigen::MatrixXd F = Eigen::MatrixXd::Identity(n, n);
  switch (kind) {
    case Kinematics::CV:
      F(0, 1) = dt;
      F(2, 3) = dt;
      break;
    case Kinematics::CA:
      for (int a = 0; a < 2; ++a) {
        F(kPos[a], kVel[a]) = dt;
        F(kPos[a], kAcc[a]) = 0.5 * dt * dt;
        F(kVel[a], kAcc[a]) = dt;
      }
      break;
    case Kinematics::CT: {
      if (std::abs(omega) < 1e-12) {
        F(0, 1) = dt;
        F(2, 3) = dt;
        break;
      }
      const double s = std::sin(omega * dt);
      const double c = std::cos(omega * dt);
      const double w = omega;
      F << 1, s / w, 0, -(1 - c) / w,
           0, c, 0, -s,
           0, (1 - c) / w, 1, s / w,
           0, s, 0, c;
      break;
    }
  }
  return F;
}

Eigen::MatrixXd FilterModel::process_noise(double dt) const {
  const int n = dim();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  const double dt2 = dt * dt;
  const double dt3 = dt2 * dt;
  if (kind == Kinematics::CA) {
    const double dt4 = dt3 * dt;
    const double dt5 = dt4 * dt;
    for (int a = 0; a < 2; ++a) {
      const int p = kPos[a], v = kVel[a], acc = kAcc[a];
      Q(p, p) = dt5 / 20.0;
      Q(p, v) = Q(v, p) = dt4 / 8.0;
      Q(p, acc) = Q(acc, p) = dt3 / 6.0;
      Q(v, v) = dt3 / 3.0;
      Q(v, acc) = Q(acc, v) = dt2 / 2.0;
      Q(acc, acc) = dt;
    }
  } else {
    for (int a = 0; a < 2; ++a) {
      const int p = kPos[a], v = kVel[a];
      Q(p, p) = dt3 / 3.0;
      Q(p, v) = Q(v, p) = dt2 / 2.0;
      Q(v, v) = dt;
    }
  }
  return q * Q;
}

void ImmConfig::validate() const {
  if (bank.empty()) throw std::invalid_argument("ImmConfig: empty model bank");
  const auto n = static_cast<Eigen::Index>(bank.size());
  if (mixing.rows() != n || mixing.cols() != n) {
    throw std::invalid_argument("ImmConfig: mixing matrix shape mismatch");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if ((mixing.row(i).array() < 0.0).any() || std::abs(mixing.row(i).sum() - 1.0) > 1e-12) {
      throw std::invalid_argument("ImmConfig: mixing rows must sum to 1");
    }
  }
  if (mu0.size() != n || (mu0.array() < 0.0).any() || std::abs(mu0.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("ImmConfig: mu0 must be a probability vector");
  }
  for (const auto& m : bank) {
    if (m.q < 0.0) throw std::invalid_argument("ImmConfig: negative process noise");
  }
}

Eigen::MatrixXd ImmConfig::sticky_mixing(std::size_t n, double stay) {
  const auto k = static_cast<Eigen::Index>(n);
  if (n == 1) return Eigen::MatrixXd::Ones(1, 1);
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(k, k, (1.0 - stay) / static_cast<double>(n - 1));
  m.diagonal().setConstant(stay);
  return m;
}

namespace {

ImmConfig with_uniform_prior(std::vector<FilterModel> bank) {
  ImmConfig cfg;
  const auto n = static_cast<Eigen::Index>(bank.size());
  cfg.bank = std::move(bank);
  cfg.mixing = ImmConfig::sticky_mixing(cfg.bank.size(), 0.95);
  cfg.mu0 = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  return cfg;
}

FilterModel cv(double q) { return {Kinematics::CV, q, 0.0, 100.0, "CV q=" + std::to_string(q)}; }
FilterModel ca(double q) { return {Kinematics::CA, q, 0.0, 100.0, "CA q=" + std::to_string(q)}; }
FilterModel ct(double deg_per_s, double q = 1.0) {
  return {Kinematics::CT, q, deg_per_s * kDeg, 100.0, "CT w=" + std::to_string(deg_per_s)};
}

}  // namespace

ImmConfig ImmConfig::desk_preset() {
  return with_uniform_prior({cv(0.1), cv(10.0), ca(1.0), ca(50.0), ct(3.0), ct(-3.0), ct(10.0),
                             ct(-10.0)});
}

ImmConfig ImmConfig::wide_preset() {
  return with_uniform_prior({cv(0.01), cv(0.1), cv(1.0), cv(10.0), ca(0.1), ca(1.0), ca(10.0),
                             ca(50.0), ct(1.5), ct(-1.5), ct(3.0), ct(-3.0), ct(6.0), ct(-6.0),
                             ct(10.0), ct(-10.0)});
}

ImmConfig ImmConfig::single(const FilterModel& model) { return with_uniform_prior({model}); }

ImmConfig ImmConfig::from_preset(const std::string& name) {
  if (name == "desk8") return desk_preset();
  if (name == "wide16") return wide_preset();
  if (name == "cv") return single(cv(0.1));
  throw std::invalid_argument("unknown IMM preset: " + name);
}

ImmState init_from_measurements(const geo::ConvertedMeasurement& z1,
                                const geo::ConvertedMeasurement& z2, const ImmConfig& cfg) {
  cfg.validate();
  const double dt = z2.t - z1.t;
  if (!(dt > 0.0)) throw std::invalid_argument("init_from_measurements: z2.t must exceed z1.t");

  Vec4 x;
  x << z2.x, (z2.x - z1.x) / dt, z2.y, (z2.y - z1.y) / dt;
  Mat4 P = Mat4::Zero();
  const geo::Mat2& s1 = z1.cov;
  const geo::Mat2& s2 = z2.cov;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      P(kPos[a], kPos[b]) = s2(a, b);
      P(kPos[a], kVel[b]) = s2(a, b) / dt;
      P(kVel[a], kPos[b]) = s2(a, b) / dt;
      P(kVel[a], kVel[b]) = (s1(a, b) + s2(a, b)) / (dt * dt);
    }
  }

  ImmState state;
  state.mu = cfg.mu0;
  for (const FilterModel& m : cfg.bank) {
    ModelState ms;
    ms.x = Eigen::VectorXd::Zero(m.dim());
    ms.P = Eigen::MatrixXd::Zero(m.dim(), m.dim());
    ms.x.head(kCommon) = x;
    ms.P.topLeftCorner(kCommon, kCommon) = P;
    if (m.kind == Kinematics::CA) {
      ms.P(kAcc[0], kAcc[0]) = m.init_accel_var;
      ms.P(kAcc[1], kAcc[1]) = m.init_accel_var;
    }
    state.models.push_back(std::move(ms));
  }
  state.estimate.x = x;
  state.estimate.P = P;
  state.estimate.mu = cfg.mu0;
  state.estimate.t = z2.t;
  return state;
}

ImmState imm_step(const ImmState& prev, const geo::ConvertedMeasurement& z, double dt,
                  const ImmConfig& cfg) {
  if (!geo::is_positive_definite(z.cov)) {
    throw std::invalid_argument("imm_step: measurement covariance must be positive definite");
  }
  const auto n = static_cast<Eigen::Index>(cfg.bank.size());
  if (static_cast<Eigen::Index>(prev.models.size()) != n || prev.mu.size() != n) {
    throw std::invalid_argument("imm_step: state does not match the model bank");
  }

  // Mixing in the zero-padded common space.
  const Eigen::VectorXd c = cfg.mixing.transpose() * prev.mu;
  std::vector<ModelState> mixed(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const int dim = cfg.bank[static_cast<std::size_t>(j)].dim();
    const ModelState& own = prev.models[static_cast<std::size_t>(j)];
    if (c(j) <= 0.0) {
      mixed[static_cast<std::size_t>(j)] = own;
      continue;
    }
    Eigen::VectorXd xm = Eigen::VectorXd::Zero(kPadded);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = cfg.mixing(i, j) * prev.mu(i) / c(j);
      if (w > 0.0) xm += w * pad(prev.models[static_cast<std::size_t>(i)].x);
    }
    Eigen::MatrixXd Pm = Eigen::MatrixXd::Zero(kPadded, kPadded);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = cfg.mixing(i, j) * prev.mu(i) / c(j);
      if (w <= 0.0) continue;
      const Eigen::VectorXd d = pad(prev.models[static_cast<std::size_t>(i)].x) - xm;
      Pm += w * (pad(prev.models[static_cast<std::size_t>(i)].P) + d * d.transpose());
    }
    mixed[static_cast<std::size_t>(j)].x = xm.head(dim);
    mixed[static_cast<std::size_t>(j)].P = Pm.topLeftCorner(dim, dim);
  }

  // Per-model predict/update.
  ImmState next;
  next.models.resize(static_cast<std::size_t>(n));
  Eigen::VectorXd log_like(n);
  const Eigen::Vector2d zv(z.x, z.y);
  for (Eigen::Index j = 0; j < n; ++j) {
    const FilterModel& model = cfg.bank[static_cast<std::size_t>(j)];
    const ModelState& m = mixed[static_cast<std::size_t>(j)];
    const Eigen::MatrixXd F = model.transition(dt);
    Eigen::VectorXd xp = F * m.x;
    Eigen::MatrixXd Pp = F * m.P * F.transpose() + model.process_noise(dt);
    symmetrize(Pp);

    const Eigen::MatrixXd H = position_selector(model.dim());
    const Eigen::Vector2d nu = zv - H * xp;
    Eigen::Matrix2d S = H * Pp * H.transpose() + z.cov;
    Eigen::LLT<Eigen::Matrix2d> llt(S);
    if (llt.info() != Eigen::Success) {
      S += geo::kCovJitter * Eigen::Matrix2d::Identity();
      llt.compute(S);
      if (llt.info() != Eigen::Success) {
        throw NumericError("imm_step: singular innovation covariance");
      }
    }
    const Eigen::MatrixXd K = llt.solve(H * Pp).transpose();
    ModelState& out = next.models[static_cast<std::size_t>(j)];
    out.x = xp + K * nu;
    // Joseph form keeps P symmetric PSD.
    const Eigen::MatrixXd IKH = Eigen::MatrixXd::Identity(model.dim(), model.dim()) - K * H;
    out.P = IKH * Pp * IKH.transpose() + K * z.cov * K.transpose();
    symmetrize(out.P);

    const Eigen::Matrix2d L = llt.matrixL();
    const double log_det = 2.0 * (std::log(L(0, 0)) + std::log(L(1, 1)));
    const double maha = nu.dot(llt.solve(nu));
    log_like(j) = -0.5 * (maha + log_det) - std::log(2.0 * geo::kPi);
  }

  // Model probabilities via log-sum-exp.
  double max_log = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (c(j) > 0.0) max_log = std::max(max_log, log_like(j) + std::log(c(j)));
  }
  next.mu = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (c(j) > 0.0) next.mu(j) = std::exp(log_like(j) + std::log(c(j)) - max_log);
  }
  const double total = next.mu.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericError("imm_step: model probabilities degenerate");
  }
  next.mu /= total;

  // Moment-matched combination on the common state.
  Vec4 xc = Vec4::Zero();
  for (Eigen::Index j = 0; j < n; ++j) {
    xc += next.mu(j) * next.models[static_cast<std::size_t>(j)].x.head(kCommon);
  }
  Mat4 Pc = Mat4::Zero();
  for (Eigen::Index j = 0; j < n; ++j) {
    const ModelState& m = next.models[static_cast<std::size_t>(j)];
    const Vec4 d = m.x.head(kCommon) - xc;
    Pc += next.mu(j) * (m.P.topLeftCorner(kCommon, kCommon) + d * d.transpose());
  }
  next.estimate.x = xc;
  next.estimate.P = 0.5 * (Pc + Pc.transpose());
  next.estimate.mu = next.mu;
  next.estimate.t = z.t;
  return next;
}

double nees(const ImmEstimate& est, const Vec4& truth) {
  const Vec4 e = truth - est.x;
  return e.dot(est.P.ldlt().solve(e));
}

}  // namespace mupo::imm
