#include "evolve/space_family.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace evolve {

SpaceFamily::SpaceFamily(int dim, double horizon, MatrixFn gram_h, MatrixFn gram_v,
                         MatrixFn gram_h_dot)
    : SpaceFamily(dim, horizon, std::move(gram_h), std::move(gram_v), std::move(gram_h_dot),
                  Options{}) {}

SpaceFamily::SpaceFamily(int dim, double horizon, MatrixFn gram_h, MatrixFn gram_v,
                         MatrixFn gram_h_dot, Options opt)
    : dim_(dim),
      horizon_(horizon),
      gram_h_(std::move(gram_h)),
      gram_v_(std::move(gram_v)),
      gram_h_dot_(std::move(gram_h_dot)),
      opt_(std::move(opt)) {
  if (dim_ <= 0) throw PreconditionError("SpaceFamily: dimension must be positive");
  if (horizon_ <= 0.0) throw PreconditionError("SpaceFamily: horizon must be positive");
  if (!gram_h_ || !gram_v_) throw PreconditionError("SpaceFamily: Gram maps required");
  Matrix b0 = gram_h_(0.0);
  if (b0.rows() != dim_ || b0.cols() != dim_)
    throw DimensionError("SpaceFamily: gram_h(0) has wrong shape");
}

void SpaceFamily::check_time(double t) const {
  if (t < 0.0 || t > horizon_)
    throw TimeDomainError("time " + std::to_string(t) + " outside [0," +
                          std::to_string(horizon_) + "]");
}

void SpaceFamily::check_dim(const Vector& v) const {
  if (v.size() != dim_)
    throw DimensionError("coefficient vector has length " + std::to_string(v.size()) +
                         ", expected " + std::to_string(dim_));
}

Matrix SpaceFamily::gram_h(double t) const {
  check_time(t);
  return gram_h_(t);
}

Matrix SpaceFamily::gram_v(double t) const {
  check_time(t);
  return gram_v_(t);
}

Matrix SpaceFamily::gram_h_dot(double t) const {
  check_time(t);
  if (gram_h_dot_) return symmetrize(gram_h_dot_(t));
  return symmetrize(fd_matrix_derivative(gram_h_, t, horizon_, fd_step()));
}

double SpaceFamily::inner_h(double t, const Vector& u, const Vector& v) const {
  check_time(t);
  check_dim(u);
  check_dim(v);
  return u.dot(gram_h_(t) * v);
}

double SpaceFamily::inner_v(double t, const Vector& u, const Vector& v) const {
  check_time(t);
  check_dim(u);
  check_dim(v);
  return u.dot(gram_v_(t) * v);
}

double SpaceFamily::norm_h(double t, const Vector& u) const {
  return std::sqrt(std::max(0.0, inner_h(t, u, u)));
}

double SpaceFamily::norm_v(double t, const Vector& u) const {
  return std::sqrt(std::max(0.0, inner_v(t, u, u)));
}

double SpaceFamily::dual_norm_vstar(double t, const Vector& g) const {
  check_time(t);
  check_dim(g);
  Vector x = spd_solve(gram_v_(t), g, opt_.rcond_floor);
  return std::sqrt(std::max(0.0, g.dot(x)));
}

double SpaceFamily::theta(double t, const Vector& u0) const {
  check_dim(u0);
  Matrix d = gram_h_dot(t);
  return u0.dot(d * u0);
}

double SpaceFamily::lambda_form(double t, const Vector& u, const Vector& v) const {
  check_dim(u);
  check_dim(v);
  Matrix d = gram_h_dot(t);
  // Polarization keeps the form exactly symmetric in floating point.
  Vector p = u + v;
  Vector m = u - v;
  return 0.25 * (p.dot(d * p) - m.dot(d * m));
}

Matrix SpaceFamily::transfer_operator(double t) const {
  check_time(t);
  return spd_solve(gram_h_(0.0), Matrix(gram_h_(t)), opt_.rcond_floor);
}

namespace {

// Linear interpolation between tabulated Gram blocks.
class TabulatedGram {
 public:
  TabulatedGram(std::vector<Matrix> blocks, double horizon)
      : blocks_(std::move(blocks)), horizon_(horizon) {}

  Matrix operator()(double t) const {
    const int m = static_cast<int>(blocks_.size()) - 1;
    double s = t / horizon_ * m;
    int cell = std::min(std::max(0, static_cast<int>(std::floor(s))), m - 1);
    double a = s - cell;
    return (1.0 - a) * blocks_[cell] + a * blocks_[cell + 1];
  }

 private:
  std::vector<Matrix> blocks_;
  double horizon_;
};

Matrix read_block(std::istream& in, int n, const char* what) {
  Matrix b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!(in >> b(i, j)))
        throw ParseError(std::string("family file: truncated ") + what + " block", 0, 0);
  return b;
}

}  // namespace

std::shared_ptr<const SpaceFamily> SpaceFamily::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open family file " + path.string(), 0, 0);
  int n = 0, m = 0;
  double horizon = 0.0;
  if (!(in >> n >> horizon >> m)) throw ParseError("family file: bad header", 1, 1);
  if (n <= 0 || m < 1 || horizon <= 0.0)
    throw ParseError("family file: header values out of range", 1, 1);
  std::vector<Matrix> h_blocks, v_blocks;
  h_blocks.reserve(m + 1);
  v_blocks.reserve(m + 1);
  for (int k = 0; k <= m; ++k) {
    h_blocks.push_back(read_block(in, n, "H"));
    v_blocks.push_back(read_block(in, n, "V"));
  }
  Options opt;
  opt.declared_h0 = h_blocks.front();
  return std::make_shared<SpaceFamily>(n, horizon, TabulatedGram(std::move(h_blocks), horizon),
                                       TabulatedGram(std::move(v_blocks), horizon), nullptr,
                                       std::move(opt));
}

void SpaceFamily::to_file(const std::filesystem::path& path, int blocks) const {
  if (blocks < 1) throw PreconditionError("to_file: need at least one block interval");
  std::ofstream out(path);
  out.precision(17);
  out << dim_ << " " << horizon_ << " " << blocks << "\n";
  for (int k = 0; k <= blocks; ++k) {
    double t = horizon_ * static_cast<double>(k) / blocks;
    for (const Matrix& g : {gram_h_(t), gram_v_(t)}) {
      for (int i = 0; i < dim_; ++i) {
        for (int j = 0; j < dim_; ++j) out << g(i, j) << (j + 1 == dim_ ? "" : " ");
        out << "\n";
      }
    }
  }
}

CompatibilityReport check_compatibility(const SpaceFamily& fam, const TimeGrid& grid,
                                        int n_samples, double continuity_bound) {
  std::vector<double> times;
  if (n_samples > 1) {
    times.resize(n_samples);
    for (int i = 0; i < n_samples; ++i)
      times[i] = fam.horizon() * static_cast<double>(i) / (n_samples - 1);
  } else {
    times = grid.nodes();
  }

  const int n = fam.dim();
  CompatibilityReport rep;
  rep.declared_cx = fam.options().declared_cx;

  Matrix b0 = fam.gram_h(0.0);
  Matrix k0 = fam.gram_v(0.0);
  if (fam.options().declared_h0) {
    const Matrix& decl = *fam.options().declared_h0;
    rep.initial_gram_matches =
        (b0 - decl).norm() <= 1e-12 * std::max(1.0, decl.norm());
  }

  rep.min_spd_margin_h = std::numeric_limits<double>::infinity();
  rep.min_spd_margin_v = std::numeric_limits<double>::infinity();
  rep.cx_h = 0.0;
  rep.cx_v = 0.0;

  // Probe vectors for the sampled continuity modulus.
  std::vector<Vector> probes;
  for (int i = 0; i < n; ++i) probes.push_back(Vector::Unit(n, i));
  probes.push_back(Vector::Ones(n) / std::sqrt(static_cast<double>(n)));

  std::vector<double> prev_forms;
  for (std::size_t s = 0; s < times.size(); ++s) {
    double t = times[s];
    Matrix b = fam.gram_h(t);
    Matrix k = fam.gram_v(t);

    for (const auto* pair : {&b, &k}) {
      const Matrix& g = *pair;
      double scale = g.trace() / n;
      double mn = min_eigenvalue(g);
      double margin = mn / std::max(scale, 1e-300);
      bool is_h = (pair == &b);
      if (is_h)
        rep.min_spd_margin_h = std::min(rep.min_spd_margin_h, margin);
      else
        rep.min_spd_margin_v = std::min(rep.min_spd_margin_v, margin);
      if (margin <= fam.options().spd_tol)
        throw SpdViolationError("Gram matrix loses positive definiteness at t=" +
                                    std::to_string(t),
                                t);
    }

    auto ext_h = pencil_extremes(b, b0);
    double cx_here = std::max(std::sqrt(ext_h.max), 1.0 / std::sqrt(ext_h.min));
    if (cx_here > rep.cx_h) {
      rep.cx_h = cx_here;
      rep.worst_t_h = t;
    }
    auto ext_v = pencil_extremes(k, k0);
    double cxv_here = std::max(std::sqrt(ext_v.max), 1.0 / std::sqrt(ext_v.min));
    if (cxv_here > rep.cx_v) {
      rep.cx_v = cxv_here;
      rep.worst_t_v = t;
    }

    std::vector<double> forms(probes.size());
    for (std::size_t p = 0; p < probes.size(); ++p) forms[p] = probes[p].dot(b * probes[p]);
    if (s > 0) {
      for (std::size_t p = 0; p < probes.size(); ++p) {
        double denom = std::max({forms[p], prev_forms[p], 1e-300});
        rep.max_jump = std::max(rep.max_jump, std::abs(forms[p] - prev_forms[p]) / denom);
      }
    }
    prev_forms = std::move(forms);
  }

  rep.continuity_pass = rep.max_jump <= continuity_bound;
  if (rep.declared_cx)
    rep.declared_cx_pass =
        std::max(rep.cx_h, rep.cx_v) <= *rep.declared_cx * (1.0 + 1e-9) + 1e-12;
  return rep;
}

}  // namespace evolve
