#include "gpursuit/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

namespace gpursuit {

void SystemConfig::validate() const {
  if (m < 1 || n < 1 || t < 1 || l < 0 || b_rx < 1 || b_tx < 1)
    throw ConfigError("SystemConfig: all dimensions must be >= 1");
  if (t < n) throw ConfigError("SystemConfig: training length t must be >= n");
  if (b_rx < m) throw ConfigError("SystemConfig: b_rx must be >= m");
  if (b_tx < n) throw ConfigError("SystemConfig: b_tx must be >= n");
  if (l > std::min<long long>(static_cast<long long>(b_rx) * b_tx,
                              static_cast<long long>(m) * t))
    throw ConfigError("SystemConfig: l exceeds min(b_rx*b_tx, m*t)");
  if (!(rho > 0.0)) throw ConfigError("SystemConfig: rho must be > 0");
}

void to_json(nlohmann::json& j, const SystemConfig& cfg) {
  j = nlohmann::json{{"m", cfg.m},         {"n", cfg.n},     {"t", cfg.t},
                     {"l", cfg.l},         {"b_rx", cfg.b_rx}, {"b_tx", cfg.b_tx},
                     {"rho", cfg.rho},     {"seed", cfg.seed}};
}

void from_json(const nlohmann::json& j, SystemConfig& cfg) {
  j.at("m").get_to(cfg.m);
  j.at("n").get_to(cfg.n);
  j.at("t").get_to(cfg.t);
  j.at("l").get_to(cfg.l);
  j.at("b_rx").get_to(cfg.b_rx);
  j.at("b_tx").get_to(cfg.b_tx);
  if (j.contains("rho")) j.at("rho").get_to(cfg.rho);
  if (j.contains("seed")) j.at("seed").get_to(cfg.seed);
}

void PathSet::validate() const {
  const auto l = gains.size();
  if (aoa.size() != l || aod.size() != l)
    throw ConfigError("PathSet: gains/aoa/aod lengths differ");
  bool any_nonzero = l == 0;
  for (Eigen::Index i = 0; i < l; ++i) {
    if (!std::isfinite(gains[i].real()) || !std::isfinite(gains[i].imag()))
      throw ConfigError("PathSet: non-finite gain");
    if (std::abs(gains[i]) > 0.0) any_nonzero = true;
    if (!(aoa[i] >= -M_PI / 2 && aoa[i] <= M_PI / 2))
      throw ConfigError("PathSet: aoa outside [-pi/2, pi/2]");
    if (!(aod[i] >= -M_PI / 2 && aod[i] <= M_PI / 2))
      throw ConfigError("PathSet: aod outside [-pi/2, pi/2]");
  }
  if (!any_nonzero) throw ConfigError("PathSet: all gains are zero");
}

void to_json(nlohmann::json& j, const PathSet& paths) {
  std::vector<double> re(paths.size()), im(paths.size()), aoa(paths.size()),
      aod(paths.size());
  for (int i = 0; i < paths.size(); ++i) {
    re[i] = paths.gains[i].real();
    im[i] = paths.gains[i].imag();
    aoa[i] = paths.aoa[i];
    aod[i] = paths.aod[i];
  }
  j = nlohmann::json{
      {"gains_re", re}, {"gains_im", im}, {"aoa", aoa}, {"aod", aod}};
}

void from_json(const nlohmann::json& j, PathSet& paths) {
  const auto re = j.at("gains_re").get<std::vector<double>>();
  const auto im = j.at("gains_im").get<std::vector<double>>();
  const auto aoa = j.at("aoa").get<std::vector<double>>();
  const auto aod = j.at("aod").get<std::vector<double>>();
  if (re.size() != im.size() || re.size() != aoa.size() || re.size() != aod.size())
    throw ConfigError("PathSet json: field lengths differ");
  const int l = static_cast<int>(re.size());
  paths.gains.resize(l);
  paths.aoa.resize(l);
  paths.aod.resize(l);
  for (int i = 0; i < l; ++i) {
    paths.gains[i] = {re[i], im[i]};
    paths.aoa[i] = aoa[i];
    paths.aod[i] = aod[i];
  }
}

cvec VirtualChannel::dense() const {
  cvec x = cvec::Zero(b());
  for (std::size_t k = 0; k < support.size(); ++k) x[support[k]] = values[k];
  return x;
}

VirtualChannel VirtualChannel::from_dense(const cvec& x, int b_rx, int b_tx,
                                          double tol) {
  if (x.size() != static_cast<Eigen::Index>(b_rx) * b_tx)
    throw ConfigError("VirtualChannel: vector length does not match grid");
  VirtualChannel vc;
  vc.b_rx = b_rx;
  vc.b_tx = b_tx;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (std::abs(x[k]) > tol) {
      vc.support.push_back(static_cast<int>(k));
      vc.values.push_back(x[k]);
    }
  }
  return vc;
}

bool operator==(const VirtualChannel& a, const VirtualChannel& b) {
  return a.b_rx == b.b_rx && a.b_tx == b.b_tx && a.support == b.support &&
         a.values == b.values;
}

cvec steering_vector(double theta, int m) {
  if (m < 1) throw ConfigError("steering_vector: m must be >= 1");
  if (!(theta >= -M_PI / 2 && theta <= M_PI / 2))
    throw ConfigError("steering_vector: angle outside [-pi/2, pi/2]");
  cvec a(m);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  const double step = -M_PI * std::sin(theta);
  for (int k = 0; k < m; ++k) a[k] = std::polar(scale, step * k);
  return a;
}

cmat make_channel(const PathSet& paths, int m, int n) {
  paths.validate();
  cmat h = cmat::Zero(m, n);
  for (int l = 0; l < paths.size(); ++l)
    h.noalias() += paths.gains[l] * steering_vector(paths.aoa[l], m) *
                   steering_vector(paths.aod[l], n).adjoint();
  return h;
}

Dictionary make_dictionary(int m, int n, int b_rx, int b_tx) {
  if (b_rx < m || b_tx < n)
    throw ConfigError("make_dictionary: grids must satisfy b_rx >= m, b_tx >= n");
  Dictionary dict;
  dict.a_rx.resize(m, b_rx);
  dict.a_tx.resize(n, b_tx);
  dict.grid_rx.resize(b_rx);
  dict.grid_tx.resize(b_tx);
  for (int i = 0; i < b_rx; ++i) {
    dict.grid_rx[i] = std::asin(-1.0 + 2.0 * i / b_rx);
    dict.a_rx.col(i) = steering_vector(dict.grid_rx[i], m);
  }
  for (int j = 0; j < b_tx; ++j) {
    dict.grid_tx[j] = std::asin(-1.0 + 2.0 * j / b_tx);
    dict.a_tx.col(j) = steering_vector(dict.grid_tx[j], n);
  }
  return dict;
}

TrainingSequence make_zc_training(int n, int t, int root) {
  if (n < 1 || t < n) throw ConfigError("make_zc_training: need 1 <= n <= t");
  if (root < 1 || std::gcd(root, t) != 1)
    throw ConfigError("make_zc_training: root must satisfy gcd(root, t) = 1");
  cvec z(t);
  for (int k = 0; k < t; ++k) {
    const double num = (t % 2 == 0) ? static_cast<double>(k) * k
                                    : static_cast<double>(k) * (k + 1);
    z[k] = std::polar(1.0, -M_PI * root * num / t);
  }
  TrainingSequence seq;
  seq.root = root;
  seq.base = z;
  seq.s.resize(n, t);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < t; ++c) seq.s(r, c) = z[(c + r) % t];
  return seq;
}

namespace {

// Lower index wins on exact distance ties.
int nearest_grid_index(const rvec& grid, double theta) {
  int best = 0;
  double best_dist = std::abs(theta - grid[0]);
  for (int i = 1; i < grid.size(); ++i) {
    const double d = std::abs(theta - grid[i]);
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

} // namespace

VirtualChannel nearest_grid_map(const PathSet& paths, const Dictionary& dict) {
  if (paths.size() > 0) paths.validate();
  std::set<int> used;
  std::vector<std::pair<int, cplx>> cells;
  for (int l = 0; l < paths.size(); ++l) {
    const int i = nearest_grid_index(dict.grid_rx, paths.aoa[l]);
    const int j = nearest_grid_index(dict.grid_tx, paths.aod[l]);
    const int k = cell_to_index(i, j, dict.b_rx());
    if (!used.insert(k).second)
      throw GridCollisionError("nearest_grid_map: two paths share grid cell " +
                               std::to_string(k));
    cells.emplace_back(k, paths.gains[l]);
  }
  std::sort(cells.begin(), cells.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  VirtualChannel vc;
  vc.b_rx = dict.b_rx();
  vc.b_tx = dict.b_tx();
  for (const auto& [k, g] : cells) {
    vc.support.push_back(k);
    vc.values.push_back(g);
  }
  return vc;
}

cvec quantize(const cvec& y) {
  cvec q(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i)
    q[i] = {y[i].real() >= 0.0 ? 1.0 : -1.0, y[i].imag() >= 0.0 ? 1.0 : -1.0};
  return q;
}

cmat make_noise(int m, int t, Philox& rng) {
  cmat noise(m, t);
  for (int c = 0; c < t; ++c)
    for (int r = 0; r < m; ++r) noise(r, c) = rng.next_cnormal();
  return noise;
}

MeasurementSet compose_measurement(double rho, const cmat& h,
                                   std::shared_ptr<const TrainingSequence> training,
                                   std::shared_ptr<const Dictionary> dictionary,
                                   const cmat* noise) {
  if (!(rho > 0.0)) throw ConfigError("compose_measurement: rho must be > 0");
  if (h.cols() != training->s.rows())
    throw ConfigError("compose_measurement: channel/training dims mismatch");
  cmat y = std::sqrt(rho) * h * training->s;
  if (noise != nullptr) {
    if (noise->rows() != y.rows() || noise->cols() != y.cols())
      throw ConfigError("compose_measurement: noise dims mismatch");
    y += *noise;
  }
  MeasurementSet meas;
  meas.y_hat = quantize(Eigen::Map<const cvec>(y.data(), y.size()));
  meas.rho = rho;
  meas.training = std::move(training);
  meas.dictionary = std::move(dictionary);
  return meas;
}

MeasurementSet simulate_measurement(const SystemConfig& cfg, const PathSet& paths,
                                    std::shared_ptr<const TrainingSequence> training,
                                    std::shared_ptr<const Dictionary> dictionary,
                                    Philox& rng, bool noiseless) {
  cfg.validate();
  const cmat h = make_channel(paths, cfg.m, cfg.n);
  if (noiseless)
    return compose_measurement(cfg.rho, h, std::move(training),
                               std::move(dictionary), nullptr);
  const cmat noise = make_noise(cfg.m, cfg.t, rng);
  return compose_measurement(cfg.rho, h, std::move(training), std::move(dictionary),
                             &noise);
}

PathSet random_paths(int l, Philox& rng) {
  PathSet paths;
  paths.gains.resize(l);
  paths.aoa.resize(l);
  paths.aod.resize(l);
  for (int i = 0; i < l; ++i) {
    paths.gains[i] = rng.next_cnormal();
    paths.aoa[i] = rng.next_uniform(-M_PI / 2, M_PI / 2);
    paths.aod[i] = rng.next_uniform(-M_PI / 2, M_PI / 2);
  }
  return paths;
}

} // namespace gpursuit
