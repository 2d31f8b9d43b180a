#include "topiclab/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

namespace topiclab::rng {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

// Stirling series correction log(k!) - [k log k - k + 0.5 log(2 pi k)].
double stirling_correction(std::int64_t k) {
  static const std::array<double, 10> table = {
      0.08106146679532726, 0.04134069595540929, 0.02767792568499834, 0.02079067210376509,
      0.01664469118982119, 0.01387612882307075, 0.01189670994589177, 0.01041126526197209,
      0.009255462182712733, 0.008330563433362871};
  if (k < 10) return table[static_cast<std::size_t>(k)];
  const double kp = static_cast<double>(k) + 1.0;
  const double r = 1.0 / (kp * kp);
  return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0) * r) * r) / kp;
}

}  // namespace

std::uint64_t substream_key(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t key = master;
  for (std::uint64_t tag : path) {
    std::uint64_t t = tag;
    key ^= splitmix64(t) + 0x9e3779b97f4a7c15ULL + (key << 6) + (key >> 2);
    std::uint64_t k2 = key;
    key = splitmix64(k2);
  }
  return key;
}

Stream::Stream(std::uint64_t key) {
  std::uint64_t x = key;
  for (auto& si : s_) si = splitmix64(x);
}

std::uint64_t Stream::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Stream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Stream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  double u, v, q;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    q = u * u + v * v;
  } while (q >= 1.0 || q == 0.0);
  const double f = std::sqrt(-2.0 * std::log(q) / q);
  spare_normal_ = v * f;
  has_spare_ = true;
  return u * f;
}

double Stream::gamma(double shape) {
  if (!(shape > 0.0)) throw UsageError("gamma: shape must be positive");
  if (shape < 1.0) {
    // Gamma(a) = Gamma(a+1) * U^{1/a}; log-domain guards against underflow.
    const double g = gamma(shape + 1.0);
    double u = uniform();
    while (u == 0.0) u = uniform();
    return g * std::exp(std::log(u) / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Stream::beta(double a, double b) {
  const double x = gamma(a);
  const double y = gamma(b);
  return x / (x + y);
}

std::int64_t Stream::binomial(std::int64_t n, double p) {
  if (n < 0) throw UsageError("binomial: n must be nonnegative");
  if (p < 0.0 || p > 1.0) throw UsageError("binomial: p must lie in [0,1]");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  if (p > 0.5) return n - binomial(n, 1.0 - p);

  const double np = static_cast<double>(n) * p;
  if (np < 10.0 || n < 64) {
    // Sequential inversion; safe since n*p < 10 keeps q^n well above underflow.
    const double q = 1.0 - p;
    const double s = p / q;
    const double a = static_cast<double>(n + 1) * s;
    double r = std::exp(static_cast<double>(n) * std::log(q));
    double u = uniform();
    std::int64_t x = 0;
    for (;;) {
      if (u < r) return x;
      u -= r;
      ++x;
      if (x > n) {  // numeric tail leakage
        return n;
      }
      r *= a / static_cast<double>(x) - s;
    }
  }

  // BTRD (Hoermann 1993), exact rejection sampler for n*p >= 10, p <= 1/2.
  const double q = 1.0 - p;
  const double spq = std::sqrt(np * q);
  const std::int64_t m = static_cast<std::int64_t>(std::floor(static_cast<double>(n + 1) * p));
  const double r = p / q;
  const double nr = static_cast<double>(n + 1) * r;
  const double npq = np * q;
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = np + 0.5;
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double vr = 0.92 - 4.2 / b;
  const double urvr = 0.86 * vr;

  for (;;) {
    double u;
    double v = uniform();
    if (v <= urvr) {
      u = v / vr - 0.43;
      const double us = 0.5 - std::abs(u);
      return static_cast<std::int64_t>(std::floor((2.0 * a / us + b) * u + c));
    }
    if (v >= vr) {
      u = uniform() - 0.5;
    } else {
      u = v / vr - 0.93;
      u = (u < 0.0 ? -0.5 : 0.5) - u;
      v = uniform() * vr;
    }
    const double us = 0.5 - std::abs(u);
    const std::int64_t k = static_cast<std::int64_t>(std::floor((2.0 * a / us + b) * u + c));
    if (k < 0 || k > n) continue;
    v = v * alpha / (a / (us * us) + b);
    const std::int64_t km = std::llabs(k - m);
    if (km <= 15) {
      // Recursive evaluation of f(k)/f(m).
      double f = 1.0;
      if (m < k) {
        for (std::int64_t i = m + 1; i <= k; ++i) f *= nr / static_cast<double>(i) - r;
      } else if (m > k) {
        for (std::int64_t i = k + 1; i <= m; ++i) v *= nr / static_cast<double>(i) - r;
      }
      if (v <= f) return k;
      continue;
    }
    v = std::log(v);
    const double kmd = static_cast<double>(km);
    const double rho = (kmd / npq) * (((kmd / 3.0 + 0.625) * kmd + 1.0 / 6.0) / npq + 0.5);
    const double t = -kmd * kmd / (2.0 * npq);
    if (v < t - rho) return k;
    if (v > t + rho) continue;
    const double nm = static_cast<double>(n - m + 1);
    const double nk = static_cast<double>(n - k + 1);
    const double h = (static_cast<double>(m) + 0.5) * std::log((static_cast<double>(m) + 1.0) / (r * nm)) +
                     stirling_correction(m) + stirling_correction(n - m);
    const double rhs = h + static_cast<double>(n + 1) * std::log(nm / nk) +
                       (static_cast<double>(k) + 0.5) * std::log(nk * r / (static_cast<double>(k) + 1.0)) -
                       stirling_correction(k) - stirling_correction(n - k);
    if (v <= rhs) return k;
  }
}

std::int64_t Stream::poisson(double mean) {
  if (!(mean >= 0.0)) throw UsageError("poisson: mean must be nonnegative");
  std::int64_t count = 0;
  // Reduce large means exactly via gamma interarrival times (Ahrens-Dieter).
  while (mean > 12.0) {
    const std::int64_t m = static_cast<std::int64_t>(std::floor(mean * 7.0 / 8.0));
    const double x = gamma(static_cast<double>(m));
    if (x > mean) return count + binomial(m - 1, mean / x);
    count += m;
    mean -= x;
  }
  const double limit = std::exp(-mean);
  double prod = uniform();
  while (prod > limit) {
    prod *= uniform();
    ++count;
  }
  return count;
}

Vector Stream::dirichlet(const Vector& alpha) {
  Vector out(alpha.size());
  for (;;) {
    double sum = 0.0;
    for (Index i = 0; i < alpha.size(); ++i) {
      out[i] = gamma(alpha[i]);
      sum += out[i];
    }
    if (sum > 0.0) {
      out /= sum;
      return out;
    }
  }
}

void Stream::dirichlet_ordered(const Vector& alpha, std::span<const int> order, Vector& out) {
  out.resize(alpha.size());
  for (;;) {
    double sum = 0.0;
    for (int idx : order) {
      out[idx] = gamma(alpha[idx]);
      sum += out[idx];
    }
    if (sum > 0.0) {
      out /= sum;
      return;
    }
  }
}

void Stream::multinomial(std::int64_t n, const Vector& p, std::span<std::int64_t> out) {
  const int k = static_cast<int>(p.size());
  if (static_cast<int>(out.size()) != k) throw UsageError("multinomial: output size mismatch");
  std::fill(out.begin(), out.end(), 0);
  if (k == 1) {
    out[0] = n;
    return;
  }
  // Visit categories by decreasing probability (ties by index).
  std::array<int, 64> small_order;
  std::vector<int> big_order;
  std::span<int> order;
  if (k <= 64) {
    order = std::span<int>(small_order.data(), static_cast<std::size_t>(k));
  } else {
    big_order.resize(static_cast<std::size_t>(k));
    order = big_order;
  }
  std::iota(order.begin(), order.end(), 0);
  const auto by_prob_desc = [&](int a, int b) {
    if (p[a] != p[b]) return p[a] > p[b];
    return a < b;
  };
  if (k <= 8) {  // insertion sort dominates in the sampler's hot path
    for (int i = 1; i < k; ++i) {
      const int key = order[static_cast<std::size_t>(i)];
      int j = i - 1;
      while (j >= 0 && by_prob_desc(key, order[static_cast<std::size_t>(j)])) {
        order[static_cast<std::size_t>(j + 1)] = order[static_cast<std::size_t>(j)];
        --j;
      }
      order[static_cast<std::size_t>(j + 1)] = key;
    }
  } else {
    std::sort(order.begin(), order.end(), by_prob_desc);
  }

  double remaining_mass = p.sum();
  std::int64_t remaining = n;
  for (int j = 0; j < k - 1 && remaining > 0; ++j) {
    const int cat = order[j];
    double frac = remaining_mass > 0.0 ? p[cat] / remaining_mass : 0.0;
    frac = std::clamp(frac, 0.0, 1.0);
    const std::int64_t cnt = binomial(remaining, frac);
    out[cat] = cnt;
    remaining -= cnt;
    remaining_mass -= p[cat];
  }
  if (remaining > 0) out[order[k - 1]] += remaining;
}

Vector Stream::unit_sphere(int k) {
  Vector v(k);
  for (;;) {
    for (int i = 0; i < k; ++i) v[i] = normal();
    const double norm = v.norm();
    if (norm > 0.0) return v / norm;
  }
}

}  // namespace topiclab::rng
