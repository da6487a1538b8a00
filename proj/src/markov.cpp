#include "mixflow/markov.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>

namespace mixflow {

RationalMatrix RationalMatrix::identity(int size) {
    RationalMatrix m(size);
    for (int i = 0; i < size; ++i) m.at(i, i) = 1;
    return m;
}

RationalMatrix operator*(const RationalMatrix& l, const RationalMatrix& r) {
    if (l.n != r.n) throw std::invalid_argument("matrix size mismatch");
    RationalMatrix out(l.n);
    for (int i = 0; i < l.n; ++i)
        for (int k = 0; k < l.n; ++k) {
            const ExactScalar& a = l.at(i, k);
            if (a.is_zero()) continue;
            for (int j = 0; j < l.n; ++j)
                if (!r.at(k, j).is_zero()) out.at(i, j) += a * r.at(k, j);
        }
    return out;
}

std::vector<ExactScalar> RationalMatrix::apply(const std::vector<ExactScalar>& v) const {
    if (static_cast<int>(v.size()) != n) throw std::invalid_argument("vector size mismatch");
    std::vector<ExactScalar> out(n, ExactScalar(0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (!at(i, j).is_zero() && !v[j].is_zero()) out[i] += at(i, j) * v[j];
    return out;
}

bool RationalMatrix::is_doubly_stochastic() const {
    for (int i = 0; i < n; ++i) {
        ExactScalar row = 0, col = 0;
        for (int j = 0; j < n; ++j) {
            if (at(i, j).sign() < 0) return false;
            row += at(i, j);
            col += at(j, i);
        }
        if (row != 1 || col != 1) return false;
    }
    return true;
}

int rank(const RationalMatrix& m) {
    const int n = m.n;
    mpz_class den = 1;
    for (const auto& x : m.a) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), x.denominator().get_mpz_t());
    std::vector<mpz_class> a(m.a.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = m.a[i].numerator() * (den / m.a[i].denominator());
    auto A = [&](int i, int j) -> mpz_class& { return a[static_cast<std::size_t>(i) * n + j]; };
    // Bareiss elimination
    int r = 0;
    mpz_class prev = 1;
    for (int c = 0; c < n && r < n; ++c) {
        int piv = r;
        while (piv < n && A(piv, c) == 0) ++piv;
        if (piv == n) continue;
        if (piv != r)
            for (int j = 0; j < n; ++j) std::swap(A(piv, j), A(r, j));
        for (int i = r + 1; i < n; ++i) {
            for (int j = c + 1; j < n; ++j) {
                A(i, j) = A(r, c) * A(i, j) - A(i, c) * A(r, j);
                mpz_divexact(A(i, j).get_mpz_t(), A(i, j).get_mpz_t(), prev.get_mpz_t());
            }
            A(i, c) = 0;
        }
        prev = A(r, c);
        ++r;
    }
    return r;
}

namespace {

RationalMatrix pair_average(int n, int parity) {
    RationalMatrix m(n);
    const ExactScalar h(1, 2);
    for (int l = parity; l < n + parity; l += 2) {
        int a = l % n, b = (l + 1) % n;
        m.at(a, a) += h;
        m.at(a, b) += h;
        m.at(b, a) += h;
        m.at(b, b) += h;
    }
    return m;
}

void check_cycle(int n, const std::vector<int>& sigma) {
    if (static_cast<int>(sigma.size()) != n) throw std::invalid_argument("sigma has wrong length");
    std::vector<char> seen(n, 0);
    int k = 0, len = 0;
    do {
        if (k < 0 || k >= n || seen[k]) throw std::invalid_argument("sigma is not a single n-cycle");
        seen[k] = 1;
        k = sigma[k];
        ++len;
    } while (k != 0);
    if (len != n) throw std::invalid_argument("sigma is not a single n-cycle");
}

RationalMatrix permutation_matrix(const std::vector<int>& sigma) {
    RationalMatrix m(static_cast<int>(sigma.size()));
    for (int l = 0; l < m.n; ++l) m.at(sigma[l], l) = 1;
    return m;
}

}  // namespace

MarkovModel build_model(int n, const std::vector<int>& sigma) {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("n must be even and positive");
    check_cycle(n, sigma);
    MarkovModel m;
    m.n = n;
    m.sigma = sigma;
    m.A1 = pair_average(n, 0);
    m.A2 = pair_average(n, 1);
    m.A3 = permutation_matrix(sigma);
    m.P = m.A3 * (m.A2 * m.A1);
    return m;
}

MarkovModel permutation_only_model(int n, const std::vector<int>& sigma) {
    check_cycle(n, sigma);
    MarkovModel m;
    m.n = n;
    m.sigma = sigma;
    m.A1 = m.A2 = RationalMatrix::identity(n);
    m.A3 = m.P = permutation_matrix(sigma);
    return m;
}

MarkovModel model_from_matrix(RationalMatrix P) {
    if (P.n < 1) throw std::invalid_argument("empty matrix");
    for (int j = 0; j < P.n; ++j) {
        ExactScalar col = 0;
        for (int i = 0; i < P.n; ++i) {
            if (P.at(i, j).sign() < 0) throw std::invalid_argument("negative transition probability");
            col += P.at(i, j);
        }
        if (col != 1) throw std::invalid_argument("column does not sum to 1");
    }
    MarkovModel m;
    m.n = P.n;
    m.P = std::move(P);
    return m;
}

std::vector<int> snake_shift(int n) {
    std::vector<int> s(n);
    for (int l = 0; l < n; ++l) s[l] = (l + 1) % n;
    return s;
}

std::vector<int> snake_cycle(const CyclicConstruction& c) {
    const int G = c.params.D * c.params.M;
    auto order = snake_order(G);
    auto pos = snake_positions(G);
    std::vector<int> sigma(order.size());
    for (std::size_t l = 0; l < order.size(); ++l) sigma[l] = pos[c.time_one(order[l])];
    return sigma;
}

Aperiodicity is_aperiodic(const MarkovModel& m) {
    const int n = m.n;
    const int words = (n + 63) / 64;
    using Rows = std::vector<std::vector<std::uint64_t>>;
    Rows B(n, std::vector<std::uint64_t>(words, 0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (m.P.at(i, j).sign() > 0) B[i][j / 64] |= std::uint64_t(1) << (j % 64);
    auto full = [&](const Rows& R) {
        for (const auto& row : R)
            for (int w = 0; w < words; ++w) {
                std::uint64_t want = (w + 1 == words && n % 64) ? (std::uint64_t(1) << (n % 64)) - 1 : ~std::uint64_t(0);
                if (row[w] != want) return false;
            }
        return true;
    };
    Rows cur = B;
    for (int p = 1; p <= n * n; ++p) {
        if (full(cur)) return {true, p};
        Rows next(n, std::vector<std::uint64_t>(words, 0));
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                if (cur[i][k / 64] >> (k % 64) & 1)
                    for (int w = 0; w < words; ++w) next[i][w] |= B[k][w];
        if (next == cur && !full(next)) break;  // pattern is stationary and not positive
        cur = std::move(next);
    }
    return {false, 0};
}

SpectralReport spectral_gap(const MarkovModel& m) {
    const int n = m.n;
    if (n > 4096) throw std::runtime_error("model too large for dense eigensolving");
    SpectralReport rep;

    std::vector<ExactScalar> u = m.stationary();
    bool fixed = m.P.apply(u) == u;
    for (int j = 0; j < n && fixed; ++j) {
        ExactScalar col = 0;
        for (int i = 0; i < n; ++i) col += m.P.at(i, j);
        fixed = col == 1;
    }
    rep.uniform_fixed = fixed;
    RationalMatrix Q = m.P;
    for (int i = 0; i < n; ++i) Q.at(i, i) -= 1;
    rep.one_is_simple = rank(Q) == n - 1 && rank(Q * Q) == n - 1;

    Eigen::MatrixXd P(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) P(i, j) = m.P.at(i, j).to_double();
    Eigen::EigenSolver<Eigen::MatrixXd> es(P, true);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver did not converge");
    const auto& ev = es.eigenvalues();
    const auto& V = es.eigenvectors();
    int one = 0;
    for (int i = 1; i < n; ++i)
        if (std::abs(ev[i] - 1.0) < std::abs(ev[one] - 1.0)) one = i;
    for (int i = 0; i < n; ++i) {
        rep.moduli.push_back(std::abs(ev[i]));
        if (i != one) rep.lambda2_modulus = std::max(rep.lambda2_modulus, std::abs(ev[i]));
        Eigen::VectorXcd v = V.col(i);
        double r = (P.cast<std::complex<double>>() * v - ev[i] * v).norm() / v.norm();
        rep.residual = std::max(rep.residual, r);
    }
    std::sort(rep.moduli.rbegin(), rep.moduli.rend());
    return rep;
}

DeviationSeries power_convergence(const MarkovModel& m, int q_max, int state) {
    const int n = m.n;
    if (state < 0 || state >= n) throw std::out_of_range("state out of range");
    if (q_max < 0) throw std::invalid_argument("q_max must be nonnegative");
    if (m.sigma.empty()) {
        std::vector<ExactScalar> v(n, ExactScalar(0));
        v[state] = 1;
        const ExactScalar u(1, n);
        DeviationSeries out;
        out.state = state;
        for (int q = 0;; ++q) {
            ExactScalar worst = 0;
            for (const auto& x : v) worst = max(worst, abs(x - u));
            out.deviation.push_back(worst);
            if (q == q_max) break;
            v = m.P.apply(v);
        }
        return out;
    }
    // integer vector v = scale * P^q e_k; each pair average doubles the scale
    std::vector<int> left1(n), left2(n);
    for (int l = 0; l < n; ++l) {
        left1[l] = l % 2 == 0 ? l + 1 : l - 1;
        left2[l] = l % 2 == 1 ? (l + 1) % n : (l - 1 + n) % n;
    }
    const bool paired = !(m.A1 == RationalMatrix::identity(n));
    std::vector<mpz_class> v(n, 0), w(n);
    v[state] = 1;
    mpz_class scale = 1;
    DeviationSeries out;
    out.state = state;
    out.deviation.reserve(q_max + 1);
    for (int q = 0;; ++q) {
        mpz_class worst = 0;
        for (int l = 0; l < n; ++l) {
            mpz_class d = abs(mpz_class(n * v[l] - scale));
            if (d > worst) worst = d;
        }
        out.deviation.emplace_back(mpq_class(worst, scale * n));
        if (q == q_max) break;
        if (paired) {
            for (int l = 0; l < n; ++l) w[l] = v[l] + v[left1[l]];
            for (int l = 0; l < n; ++l) v[l] = w[l] + w[left2[l]];
            scale *= 4;
        }
        for (int l = 0; l < n; ++l) w[m.sigma[l]] = v[l];
        std::swap(v, w);
    }
    return out;
}

std::vector<DeviationSeries> power_convergence(const MarkovModel& m, int q_max) {
    std::vector<DeviationSeries> out;
    for (int k = 0; k < m.n; ++k) out.push_back(power_convergence(m, q_max, k));
    return out;
}

RateFit fit_deviation_rate(const DeviationSeries& s, int q_begin, int q_end) {
    if (q_begin < 0 || q_end >= static_cast<int>(s.deviation.size()) || q_end - q_begin < 1)
        throw std::invalid_argument("bad fit window");
    RateFit f;
    f.q_begin = q_begin;
    f.q_end = q_end;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    int cnt = 0;
    for (int q = q_begin; q <= q_end; ++q) {
        if (s.deviation[q].is_zero()) {
            f.exact_zero = true;
            f.ratio = 0;
            f.r2 = 1;
            return f;
        }
        double y = log_abs(s.deviation[q]);
        sx += q;
        sy += y;
        sxx += double(q) * q;
        sxy += q * y;
        syy += y * y;
        ++cnt;
    }
    double vx = sxx - sx * sx / cnt, vy = syy - sy * sy / cnt, cxy = sxy - sx * sy / cnt;
    double slope = cxy / vx;
    f.ratio = std::exp(slope);
    f.r2 = vy > 0 ? cxy * cxy / (vx * vy) : 1.0;
    return f;
}

std::vector<double> cesaro_deviation(const MarkovModel& m, int m_max) {
    const int n = m.n;
    Eigen::MatrixXd P(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) P(i, j) = m.P.at(i, j).to_double();
    Eigen::MatrixXd Pk = Eigen::MatrixXd::Identity(n, n), S = Eigen::MatrixXd::Zero(n, n);
    std::vector<double> out;
    for (int k = 1; k <= m_max; ++k) {
        S += Pk;
        Pk = P * Pk;
        out.push_back((S / k - Eigen::MatrixXd::Constant(n, n, 1.0 / n)).cwiseAbs().maxCoeff());
    }
    return out;
}

}  // namespace mixflow
