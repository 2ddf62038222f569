#include "morsenorm/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace morsenorm {
namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

double evaluate_at(const Jet<Rational>& j, const Eigen::VectorXd& p) {
  const std::vector<double> x = to_std(p);
  return j.evaluate(x);
}

void require_function_mode(const ProblemSpec& spec) {
  if (spec.mode != SourceMode::Function) throw PreconditionViolation("operation requires a function-mode problem");
}

/// Flips each column so that its first clearly nonzero entry is positive.
void normalize_signs(Eigen::MatrixXd& a) {
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double scale = a.col(c).cwiseAbs().maxCoeff();
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      if (std::abs(a(r, c)) > 1e-10 * scale) {
        if (a(r, c) < 0) a.col(c) *= -1.0;
        break;
      }
    }
  }
}

/// Sorts eigenpairs descending.
void sort_descending(Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });
  Eigen::VectorXd v(values.size());
  Eigen::MatrixXd m(vectors.rows(), vectors.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    v(static_cast<Eigen::Index>(k)) = values(idx[k]);
    m.col(static_cast<Eigen::Index>(k)) = vectors.col(idx[k]);
  }
  values = v;
  vectors = m;
}

Spectrum finish_spectrum(Eigen::VectorXd values, Eigen::MatrixXd vectors, double float_zero) {
  sort_descending(values, vectors);
  normalize_signs(vectors);
  Spectrum s;
  s.eigenvalues = to_std(values);
  s.diagonalizer = vectors;
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  for (double l : s.eigenvalues) {
    if (std::abs(l) <= float_zero * scale) throw DegenerateCriticalPoint("zero Morse eigenvalue: critical point is degenerate");
    if (l > 0) {
      ++s.unstable_dimension;
    } else {
      ++s.morse_index;
    }
  }
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= s.eigenvalues.size(); ++i) {
    if (i == s.eigenvalues.size() ||
        std::abs(s.eigenvalues[i] - s.eigenvalues[begin]) > 1e-9 * scale) {
      s.multiplicity_groups.emplace_back(begin, i);
      begin = i;
    }
  }
  return s;
}

/// Real eigen-decomposition of a general matrix; throws on complex spectra.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> real_eigen(const Eigen::MatrixXd& m, double float_zero) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw ComplexSpectrum("eigen-decomposition failed");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double imag_tol = std::max(float_zero, 1e-10) * scale;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (std::abs(es.eigenvalues()(i).imag()) > imag_tol)
      throw ComplexSpectrum("linear part has complex eigenvalues");
  }
  Eigen::VectorXd values = es.eigenvalues().real();
  Eigen::MatrixXd vectors = es.eigenvectors().real();
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) vectors.col(c).normalize();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(vectors);
  const auto sv = svd.singularValues();
  if (sv(sv.size() - 1) < 1e-8 * sv(0)) throw ComplexSpectrum("linear part is not diagonalizable over the reals");
  return {values, vectors};
}

Eigen::MatrixXd to_eigen(const DenseMatrix<double>& m) {
  Eigen::MatrixXd r(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  return r;
}

DenseMatrix<double> from_eigen(const Eigen::MatrixXd& m) {
  DenseMatrix<double> r(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = m(i, j);
  return r;
}

Eigen::MatrixXd linear_part_double(const ProblemSpec& spec) {
  const std::size_t n = spec.dimension;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = spec.field[i].coefficient(MultiIndex::unit(n, j)).get_d();
  }
  return m;
}

}  // namespace

Eigen::VectorXd gradient_at(const ProblemSpec& spec, const Eigen::VectorXd& p) {
  require_function_mode(spec);
  const std::size_t n = spec.dimension;
  Eigen::VectorXd g(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) g(static_cast<Eigen::Index>(j)) = evaluate_at(spec.function.derivative(j), p);
  return g;
}

Eigen::MatrixXd hessian_at(const ProblemSpec& spec, const Eigen::VectorXd& p) {
  require_function_mode(spec);
  const std::size_t n = spec.dimension;
  Eigen::MatrixXd h(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const Jet<Rational> di = spec.function.derivative(i);
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = evaluate_at(di.derivative(j), p);
      h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      h(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return h;
}

Eigen::MatrixXd metric_at(const ProblemSpec& spec, const Eigen::VectorXd& p) {
  require_function_mode(spec);
  const std::size_t n = spec.dimension;
  Eigen::MatrixXd g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = evaluate_at(spec.metric[i][j], p);
  return g;
}

CriticalPointSearch find_critical_points(const ProblemSpec& spec, std::span<const Eigen::VectorXd> seeds) {
  require_function_mode(spec);
  CriticalPointSearch out;
  const double R = spec.radius;
  const double tol = spec.tolerances.ode;
  std::vector<Eigen::VectorXd> found;
  for (const auto& seed : seeds) {
    Eigen::VectorXd x = seed;
    bool converged = false;
    for (int iter = 0; iter < 100; ++iter) {
      const Eigen::VectorXd g = gradient_at(spec, x);
      if (!g.allFinite() || x.norm() > 10.0 * R) break;
      if (g.norm() < tol) {
        converged = true;
        break;
      }
      const Eigen::MatrixXd h = hessian_at(spec, x);
      const Eigen::VectorXd step = h.fullPivLu().solve(g);
      if (!step.allFinite()) break;
      x -= step;
    }
    if (!converged) {
      out.unconverged_seeds.push_back(seed);
      continue;
    }
    // One polishing step where the Hessian allows it.
    const Eigen::MatrixXd h = hessian_at(spec, x);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(h);
    const auto sv = svd.singularValues();
    // Newton only creeps toward a singular zero and stops where sigma_min is
    // about sqrt(tol); a Morse point keeps sigma_min far above that.
    const bool degenerate = sv(sv.size() - 1) <= 10.0 * std::sqrt(tol) * std::max(1.0, sv(0));
    if (!degenerate) {
      const Eigen::VectorXd polished = x - h.fullPivLu().solve(gradient_at(spec, x));
      if (gradient_at(spec, polished).norm() <= gradient_at(spec, x).norm()) x = polished;
    }
    auto& bucket = degenerate ? out.degenerate_points : found;
    const double merge = degenerate ? 1e-3 * R : 1e-8 * R;
    const bool duplicate = std::any_of(bucket.begin(), bucket.end(),
                                       [&](const Eigen::VectorXd& q) { return (q - x).norm() < merge; });
    if (!duplicate) bucket.push_back(x);
  }
  auto order = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (std::abs(a.norm() - b.norm()) > 1e-12) return a.norm() < b.norm();
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  };
  std::sort(found.begin(), found.end(), order);
  std::sort(out.degenerate_points.begin(), out.degenerate_points.end(), order);
  // Snap tiny coordinates to zero for stable reporting.
  for (auto& p : found)
    for (Eigen::Index i = 0; i < p.size(); ++i)
      if (std::abs(p(i)) < 1e-14 * R) p(i) = 0.0;
  out.points = std::move(found);
  return out;
}

std::vector<Eigen::VectorXd> default_seeds(const ProblemSpec& spec, int per_axis) {
  const std::size_t n = spec.dimension;
  const double R = spec.radius;
  std::vector<Eigen::VectorXd> seeds;
  std::vector<int> idx(n, 0);
  for (;;) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      x(static_cast<Eigen::Index>(i)) = per_axis == 1 ? 0.0 : -R + 2.0 * R * idx[i] / (per_axis - 1);
    if (x.norm() <= R) seeds.push_back(x);
    std::size_t k = 0;
    while (k < n && ++idx[k] == per_axis) idx[k++] = 0;
    if (k == n) break;
  }
  return seeds;
}

Spectrum morse_eigenvalues(const ProblemSpec& spec, const Eigen::VectorXd& p) {
  const double fz = spec.tolerances.float_zero;
  if (spec.mode == SourceMode::Field) {
    if (p.norm() != 0.0) throw PreconditionViolation("raw-field spectra are taken at the origin");
    for (const auto& c : spec.field) {
      if (sgn(c.coefficient(MultiIndex(spec.dimension))) != 0)
        throw PreconditionViolation("raw field does not vanish at the origin");
    }
    auto [values, vectors] = real_eigen(linear_part_double(spec), fz);
    return finish_spectrum(values, vectors, fz);
  }
  const Eigen::MatrixXd h = hessian_at(spec, p);
  const Eigen::MatrixXd g = metric_at(spec, p);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(h, g);
  if (es.info() != Eigen::Success) throw DegenerateCriticalPoint("metric is not positive definite at the critical point");
  return finish_spectrum(es.eigenvalues(), es.eigenvectors(), fz);
}

template <Coefficient T>
ResonanceReport check_N_linearity(std::span<const T> lambda, int max_order, double float_zero) {
  ResonanceReport r;
  r.scanned_order = max_order;
  const std::size_t n = lambda.size();
  for (int m = 2; m <= max_order; ++m) {
    for_each_multi_index(n, m, [&](const MultiIndex& a) {
      T dot(0);
      for (std::size_t j = 0; j < n; ++j) {
        if (a[j] == 0) continue;
        T t = lambda[j];
        t *= T(a[j]);
        dot += t;
      }
      const double scale = 1.0 + std::abs(ScalarTraits<T>::to_double(dot));
      for (std::size_t i = 0; i < n; ++i) {
        T d = dot;
        d -= lambda[i];
        if (is_negligible(d, scale, float_zero)) r.witnesses.push_back({a, i});
      }
    });
  }
  r.satisfied = r.witnesses.empty();
  return r;
}

template ResonanceReport check_N_linearity<double>(std::span<const double>, int, double);
template ResonanceReport check_N_linearity<Rational>(std::span<const Rational>, int, double);

CoordinateChange<double> diagonalize_at_critical(const ProblemSpec& spec, const Eigen::VectorXd& p) {
  const Spectrum s = morse_eigenvalues(spec, p);
  const Eigen::MatrixXd ainv = s.diagonalizer.inverse();
  return CoordinateChange<double>::linear(from_eigen(ainv), spec.order);
}

std::optional<LinearNormalization<Rational>> diagonalize_exact(const PolyVectorField<Rational>& V) {
  const std::size_t n = V.dimension();
  const int L = V.order();
  for (const auto& c : V.components()) {
    if (sgn(c.coefficient(MultiIndex(n))) != 0) throw PreconditionViolation("field does not vanish at the origin");
  }
  const DenseMatrix<Rational> m = V.linear_part();
  Eigen::MatrixXd md(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) md(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j).get_d();
  auto [values, vectors] = real_eigen(md, 1e-12);

  // Candidate rational eigenvalues, each verified exactly by its null space.
  std::vector<Rational> candidates;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const Rational q = rationalize(values(i), 1000000);
    if (std::abs(q.get_d() - values(i)) > 1e-8 * std::max(1.0, std::abs(values(i)))) return std::nullopt;
    if (std::find(candidates.begin(), candidates.end(), q) == candidates.end()) candidates.push_back(q);
  }
  std::sort(candidates.begin(), candidates.end(), [](const Rational& a, const Rational& b) { return a > b; });

  DenseMatrix<Rational> a(n, n);
  std::vector<Rational> lambda;
  std::size_t col = 0;
  for (const Rational& q : candidates) {
    DenseMatrix<Rational> shifted = m;
    for (std::size_t i = 0; i < n; ++i) shifted(i, i) -= q;
    std::vector<std::vector<Rational>> basis = null_space(shifted);
    for (auto& v : basis) {
      if (col >= n) return std::nullopt;
      // First nonzero entry positive.
      for (const auto& x : v) {
        if (sgn(x) != 0) {
          if (sgn(x) < 0)
            for (auto& y : v) y = -y;
          break;
        }
      }
      for (std::size_t i = 0; i < n; ++i) a(i, col) = v[i];
      lambda.push_back(q);
      ++col;
    }
  }
  if (col != n) return std::nullopt;
  const DenseMatrix<Rational> ainv = inverse(a);
  const DenseMatrix<Rational> d = ainv * m * a;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (!(d(i, j) == (i == j ? lambda[i] : Rational(0)))) return std::nullopt;
    }
  CoordinateChange<Rational> change = CoordinateChange<Rational>::linear(ainv, L);
  PolyVectorField<Rational> field = change.is_identity() ? V : pullback_field(V, change);
  return LinearNormalization<Rational>{std::move(change), std::move(lambda), std::move(field)};
}

LinearNormalization<double> diagonalize_float(const PolyVectorField<double>& V, const Eigen::MatrixXd* metric0,
                                              double float_zero) {
  const std::size_t n = V.dimension();
  const int L = V.order();
  const Eigen::MatrixXd m = to_eigen(V.linear_part());
  Spectrum s;
  if (metric0) {
    Eigen::MatrixXd h = (*metric0) * m;
    h = 0.5 * (h + h.transpose());
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(h, *metric0);
    if (es.info() != Eigen::Success) throw DegenerateCriticalPoint("metric is not positive definite");
    s = finish_spectrum(es.eigenvalues(), es.eigenvectors(), float_zero);
  } else {
    auto [values, vectors] = real_eigen(m, float_zero);
    s = finish_spectrum(values, vectors, float_zero);
  }
  const Eigen::MatrixXd ainv = s.diagonalizer.inverse();
  CoordinateChange<double> change = CoordinateChange<double>::linear(from_eigen(ainv), L);
  PolyVectorField<double> pulled = pullback_field(V, change);

  // Snap the linear part to exactly diag(lambda).
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double tol = std::max(float_zero, 1e-9) * scale;
  std::vector<Jet<double>> comps;
  for (std::size_t i = 0; i < n; ++i) {
    Jet<double> c(n, L);
    for (const auto& [a, v] : pulled[i].terms()) {
      if (a.degree() == 0) continue;
      if (a.degree() == 1) {
        if (a[i] == 1) continue;
        if (std::abs(v) > tol) throw PreconditionViolation("diagonalization left off-diagonal linear terms");
        continue;
      }
      c.add_term(a, v);
    }
    c.add_term(MultiIndex::unit(n, i), s.eigenvalues[i]);
    comps.push_back(std::move(c));
  }
  return LinearNormalization<double>{std::move(change), s.eigenvalues, PolyVectorField<double>(std::move(comps))};
}

Jet<double> shift_origin(const Jet<Rational>& f, const Eigen::VectorXd& p) {
  const std::size_t n = f.dimension();
  Jet<double> out(n, f.order());
  // Binomial rows up to the largest exponent.
  const int maxdeg = std::max(0, f.max_degree());
  std::vector<std::vector<double>> binom(static_cast<std::size_t>(maxdeg) + 1);
  for (int k = 0; k <= maxdeg; ++k) {
    binom[k].assign(static_cast<std::size_t>(k) + 1, 1.0);
    for (int j = 1; j < k; ++j) binom[k][j] = binom[k - 1][j - 1] + binom[k - 1][j];
  }
  for (const auto& [a, c] : f.terms()) {
    // prod_i (x_i + p_i)^{a_i} = prod_i sum_{b_i} C(a_i, b_i) p_i^{a_i - b_i} x_i^{b_i}
    std::vector<int> b(n, 0);
    const double cd = c.get_d();
    for (;;) {
      double coef = cd;
      for (std::size_t i = 0; i < n; ++i) {
        coef *= binom[a[i]][b[i]] * std::pow(p(static_cast<Eigen::Index>(i)), a[i] - b[i]);
      }
      out.add_term(MultiIndex(b), coef);
      std::size_t k = 0;
      while (k < n && ++b[k] > a[k]) b[k++] = 0;
      if (k == n) break;
    }
  }
  out.canonicalize();
  return out;
}

PolyVectorField<double> source_field_at(const ProblemSpec& spec, const Eigen::VectorXd& p) {
  const std::size_t n = spec.dimension;
  const int L = spec.order;
  if (spec.mode == SourceMode::Field) {
    std::vector<Jet<double>> comps;
    for (const auto& c : spec.field) comps.push_back(shift_origin(c, p).truncated(L));
    return PolyVectorField<double>(std::move(comps));
  }
  const Jet<double> f = shift_origin(spec.function, p);
  std::vector<std::vector<Jet<double>>> g(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) g[i].push_back(shift_origin(spec.metric[i][j], p).truncated(L));
  const auto ginv = inverse_jet_matrix(g);
  std::vector<Jet<double>> comps;
  for (std::size_t i = 0; i < n; ++i) {
    Jet<double> v(n, L);
    for (std::size_t j = 0; j < n; ++j) v += multiply(ginv[i][j], f.derivative(j).truncated(L));
    comps.push_back(std::move(v));
  }
  return PolyVectorField<double>(std::move(comps));
}

}  // namespace morsenorm
