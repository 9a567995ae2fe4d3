#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace reid::oracle {

double id_loss(const Rows& logits, const std::vector<int>& targets, double eps) {
  double total = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const auto& z = logits[i];
    const double c = static_cast<double>(z.size());
    double denom = 0;
    for (double v : z) denom += std::exp(v);
    for (std::size_t k = 0; k < z.size(); ++k) {
      const double q = (static_cast<int>(k) == targets[i] ? 1.0 - eps : 0.0) + eps / c;
      total -= q * std::log(std::exp(z[k]) / denom);
    }
  }
  return total / static_cast<double>(logits.size());
}

double lr_loss(const std::vector<double>& logits, const std::vector<int>& targets) {
  double total = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-logits[i]));
    total -= targets[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<double>(logits.size());
}

double circle_loss(const std::vector<double>& sp, const std::vector<double>& sn, double gamma, double m) {
  double neg = 0, pos = 0;
  for (double s : sn) neg += std::exp(gamma * std::max(0.0, s + m) * (s - m));
  for (double s : sp) pos += std::exp(-gamma * std::max(0.0, 1.0 + m - s) * (s - (1.0 - m)));
  return std::log(1.0 + neg * pos);
}

double dve_loss(int h, int w, const Rows& phi_x, const Rows& phi_xp, const Rows& phi_aux, const Rows& warp,
                double tau) {
  const int n = h * w;
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
  };
  auto pos = [&](int v, int axis) {
    const int i = axis == 0 ? v % w : v / w;
    const int len = axis == 0 ? w : h;
    return (2.0 * i + 1.0) / len - 1.0;
  };
  double total = 0;
  for (int u = 0; u < n; ++u) {
    // Soft match of u into the auxiliary image, then the re-expressed descriptor.
    std::vector<double> a(n);
    double za = 0;
    for (int k = 0; k < n; ++k) za += std::exp(dot(phi_x[u], phi_aux[k]) / tau);
    for (int k = 0; k < n; ++k) a[k] = std::exp(dot(phi_x[u], phi_aux[k]) / tau) / za;
    std::vector<double> hat(phi_x[u].size(), 0.0);
    for (int k = 0; k < n; ++k)
      for (std::size_t c = 0; c < hat.size(); ++c) hat[c] += a[k] * phi_aux[k][c];
    double zp = 0;
    for (int v = 0; v < n; ++v) zp += std::exp(dot(hat, phi_xp[v]) / tau);
    const double gx = std::clamp(warp[u][0], -1.0, 1.0), gy = std::clamp(warp[u][1], -1.0, 1.0);
    for (int v = 0; v < n; ++v) {
      const double p = std::exp(dot(hat, phi_xp[v]) / tau) / zp;
      total += p * std::hypot(pos(v, 0) - gx, pos(v, 1) - gy);
    }
  }
  return total / n;
}

double average_precision(const std::vector<int>& flags) {
  double sum = 0;
  int hits = 0;
  for (std::size_t r = 0; r < flags.size(); ++r) {
    if (!flags[r]) continue;
    ++hits;
    int upto = 0;
    for (std::size_t k = 0; k <= r; ++k) upto += flags[k];
    sum += static_cast<double>(upto) / static_cast<double>(r + 1);
  }
  return sum / hits;
}

OracleMetrics retrieval_metrics(const std::vector<Item>& items, int protocol) {
  OracleMetrics m;
  const std::size_t n = items.size();
  auto cosine = [&](std::size_t a, std::size_t b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t k = 0; k < items[a].v.size(); ++k) {
      ab += items[a].v[k] * items[b].v[k];
      aa += items[a].v[k] * items[a].v[k];
      bb += items[b].v[k] * items[b].v[k];
    }
    return ab / std::sqrt(aa * bb);
  };
  for (std::size_t q = 0; q < n; ++q) {
    std::vector<std::size_t> gallery;
    for (std::size_t g = 0; g < n; ++g) {
      if (g == q) continue;
      const bool same_cam = items[g].camera == items[q].camera;
      if (protocol == 1 && !same_cam) continue;
      if (protocol == 2 && same_cam && items[g].id == items[q].id) continue;
      gallery.push_back(g);
    }
    if (gallery.empty()) continue;
    // Selection sort by (similarity desc, index asc): no std::sort comparator to share with the library.
    std::vector<std::size_t> order;
    std::vector<bool> used(gallery.size(), false);
    for (std::size_t step = 0; step < gallery.size(); ++step) {
      std::size_t best = gallery.size();
      for (std::size_t k = 0; k < gallery.size(); ++k) {
        if (used[k]) continue;
        if (best == gallery.size() || cosine(q, gallery[k]) > cosine(q, gallery[best])) best = k;
      }
      used[best] = true;
      order.push_back(gallery[best]);
    }
    std::vector<int> flags;
    for (auto g : order) flags.push_back(items[g].id == items[q].id ? 1 : 0);
    if (std::accumulate(flags.begin(), flags.end(), 0) == 0) continue;
    ++m.queries;
    m.mAP += average_precision(flags);
    auto hit_within = [&](std::size_t k) {
      for (std::size_t r = 0; r < std::min(k, flags.size()); ++r)
        if (flags[r]) return 1.0;
      return 0.0;
    };
    m.r1 += hit_within(1);
    m.r5 += hit_within(5);
    m.r10 += hit_within(10);
  }
  if (m.queries) {
    m.mAP /= m.queries;
    m.r1 /= m.queries;
    m.r5 /= m.queries;
    m.r10 /= m.queries;
  }
  return m;
}

namespace {

// Indices of the k nearest rows of `dist[i]` (self included), ties by index.
std::vector<int> nearest(const Rows& dist, int i, int k) {
  std::vector<int> idx(dist.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return dist[i][a] < dist[i][b]; });
  idx.resize(static_cast<std::size_t>(std::min<int>(k, static_cast<int>(idx.size()))));
  return idx;
}

std::set<int> reciprocal(const Rows& dist, int i, int k) {
  std::set<int> out;
  for (int j : nearest(dist, i, k + 1)) {
    const auto back = nearest(dist, j, k + 1);
    if (std::find(back.begin(), back.end(), i) != back.end()) out.insert(j);
  }
  return out;
}

}  // namespace

Rows rerank(const Rows& sim, int k1, int k2, double lambda) {
  const int n = static_cast<int>(sim.size());
  k1 = std::min(k1, n - 1);
  k2 = std::min(k2, n);
  Rows orig(n, std::vector<double>(n));
  double mx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      orig[i][j] = std::max(0.0, 2.0 - 2.0 * sim[i][j]);
      mx = std::max(mx, orig[i][j]);
    }
  if (mx > 0)
    for (auto& r : orig)
      for (auto& v : r) v /= mx;

  // R*(i, k1): reciprocal set expanded by the half-size sets of its members that overlap by > 2/3.
  Rows weight(n, std::vector<double>(n, 0.0));
  const int half = static_cast<int>(std::lround(k1 / 2.0));
  for (int i = 0; i < n; ++i) {
    std::set<int> r = reciprocal(orig, i, k1);
    const std::set<int> base = r;
    for (int c : base) {
      const std::set<int> rc = reciprocal(orig, c, half);
      int common = 0;
      for (int x : rc) common += base.count(x) ? 1 : 0;
      if (common > 2.0 / 3.0 * static_cast<double>(rc.size())) r.insert(rc.begin(), rc.end());
    }
    double z = 0;
    for (int j : r) z += std::exp(-orig[i][j]);
    for (int j : r) weight[i][j] = std::exp(-orig[i][j]) / z;
  }
  if (k2 != 1) {
    Rows qe(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) {
      const auto nb = nearest(orig, i, k2);
      for (int j = 0; j < n; ++j) {
        double s = 0;
        for (int t : nb) s += weight[t][j];
        qe[i][j] = s / static_cast<double>(nb.size());
      }
    }
    weight = qe;
  }
  Rows out(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double mn = 0;
      for (int k = 0; k < n; ++k) mn += std::min(weight[i][k], weight[j][k]);
      const double jac = 1.0 - mn / (2.0 - mn);
      out[i][j] = lambda * orig[i][j] + (1.0 - lambda) * jac;
    }
  return out;
}

std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double relative_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-12});
  return std::abs(a - b) / scale;
}

double max_relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor) {
  // Relative to the largest component so that entries near zero do not dominate.
  double scale = floor;
  for (double v : a) scale = std::max(scale, std::abs(v));
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  return worst;
}

}  // namespace reid::oracle
