#include "unifield/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace unifield {

namespace {

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> d{
      {"out_dir", "out"},
      {"seed", "7"},
      {"checkpoint", ""},
      {"manifest", ""},
      {"generate.n", "10"},
      {"generate.shape", "16,16,16"},
      {"generate.tasks", "64mT_to_3T,3T_to_7T"},
      {"generate.modalities", "T1,T2,FLAIR"},
      {"phantom.n_ellipsoids", "6"},
      {"phantom.texture_amp", "0.1"},
      {"fasrm.lambda_spat", "1"},
      {"fasrm.lambda_freq", "0.1"},
      {"fasrm.alpha", "1"},
      {"fasrm.cutoffs", format_real(1.0 / 3.0) + "," + format_real(2.0 / 3.0)},
      {"fasrm.focal_grad", "false"},
      {"fasrm.weights.64mT_to_3T", "0.2,0.5,0.3"},
      {"fasrm.weights.3T_to_7T", "0.1,0.3,0.6"},
      {"train.lr0", "0.0001"},
      {"train.beta1", "0.5"},
      {"train.beta2", "0.999"},
      {"train.epsilon", "1e-08"},
      {"train.total_iters", "1000"},
      {"train.decay_start", "0"},
      {"train.batch_size", "1"},
      {"model.channels", "2,16,16,16,1"},
      {"model.embed_dim", "16"},
      {"model.time_freqs", "8"},
      {"sampler.steps", "20"},
      {"preprocess.plo", "0.5"},
      {"preprocess.phi", "99.5"},
      {"preprocess.target_z_mm", "1"},
      {"preprocess.target_shape", "256,256,160"},
  };
  return d;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_real(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ConfigError("config key '" + key + "': '" + text + "' is not a finite number");
  return v;
}

long parse_int(const std::string& key, const std::string& text) {
  long v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("config key '" + key + "': '" + text + "' is not an integer");
  return v;
}

}  // namespace

std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

RunConfig::RunConfig() : values_(defaults()) {}

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [key, _] : defaults()) k.push_back(key);
    return k;
  }();
  return keys;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  RunConfig cfg;
  cfg.merge_text(ss.str(), path.string());
  return cfg;
}

void RunConfig::merge_text(const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!defaults().contains(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

std::uint64_t RunConfig::seed() const {
  const std::string& s = get("seed");
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("config key 'seed': '" + s + "' is not an unsigned integer");
  return v;
}

double RunConfig::real(const std::string& key) const { return parse_real(key, get(key)); }
long RunConfig::integer(const std::string& key) const { return parse_int(key, get(key)); }

bool RunConfig::flag(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<double> RunConfig::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : split(get(key), ',')) out.push_back(parse_real(key, s));
  return out;
}

std::vector<std::string> RunConfig::list(const std::string& key) const {
  auto items = split(get(key), ',');
  std::erase(items, "");
  return items;
}

Shape RunConfig::shape(const std::string& key) const {
  const auto parts = split(get(key), ',');
  if (parts.size() != 3) throw ConfigError("config key '" + key + "' needs nx,ny,nz");
  std::size_t d[3];
  for (int i = 0; i < 3; ++i) {
    const long v = parse_int(key, parts[i]);
    if (v < 1) throw ConfigError("config key '" + key + "' needs positive extents");
    d[i] = std::size_t(v);
  }
  return {d[0], d[1], d[2]};
}

FasrmConfig RunConfig::fasrm() const {
  FasrmConfig c;
  c.lambda_spat = real("fasrm.lambda_spat");
  c.lambda_freq = real("fasrm.lambda_freq");
  c.alpha = real("fasrm.alpha");
  c.focal_gradient = flag("fasrm.focal_grad");
  const auto cut = reals("fasrm.cutoffs");
  if (cut.size() != 2) throw ConfigError("fasrm.cutoffs needs two values r1,r2");
  c.cutoffs = {cut[0], cut[1]};
  for (const char* tr : {"64mT_to_3T", "3T_to_7T"}) {
    const std::string key = std::string("fasrm.weights.") + tr;
    const auto w = reals(key);
    if (w.size() != 3) throw ConfigError(key + " needs three values");
    c.weights[tr] = {w[0], w[1], w[2]};
  }
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

TrainConfig RunConfig::train() const {
  TrainConfig c;
  c.lr0 = real("train.lr0");
  c.beta1 = real("train.beta1");
  c.beta2 = real("train.beta2");
  c.epsilon = real("train.epsilon");
  c.total_iters = integer("train.total_iters");
  c.decay_start = integer("train.decay_start");
  c.batch_size = integer("train.batch_size");
  c.seed = seed();
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ModelConfig RunConfig::model() const {
  ModelConfig c;
  c.channels.clear();
  for (double v : reals("model.channels")) {
    if (v < 1 || v != std::floor(v)) throw ConfigError("model.channels must be positive integers");
    c.channels.push_back(std::size_t(v));
  }
  c.embed_dim = std::size_t(std::max(0L, integer("model.embed_dim")));
  c.time_freqs = std::size_t(std::max(0L, integer("model.time_freqs")));
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

SamplerConfig RunConfig::sampler() const {
  SamplerConfig c;
  c.steps = integer("sampler.steps");
  if (c.steps < 1) throw ConfigError("sampler.steps must be >= 1");
  c.seed = seed();
  return c;
}

PreprocessConfig RunConfig::preprocess() const {
  PreprocessConfig c;
  c.p_lo = real("preprocess.plo");
  c.p_hi = real("preprocess.phi");
  c.target_z_mm = real("preprocess.target_z_mm");
  c.target_shape = shape("preprocess.target_shape");
  if (!(c.p_lo >= 0.0 && c.p_lo < c.p_hi && c.p_hi <= 100.0))
    throw ConfigError("preprocess percentiles must satisfy 0 <= plo < phi <= 100");
  if (!(c.target_z_mm > 0.0)) throw ConfigError("preprocess.target_z_mm must be positive");
  return c;
}

PhantomSpec RunConfig::phantom() const {
  PhantomSpec p;
  const long n = integer("phantom.n_ellipsoids");
  if (n < 0) throw ConfigError("phantom.n_ellipsoids must be >= 0");
  p.n_ellipsoids = std::size_t(n);
  p.texture_amp = real("phantom.texture_amp");
  p.shape = shape("generate.shape");
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return p;
}

std::filesystem::path RunConfig::checkpoint_path() const {
  const std::string& c = get("checkpoint");
  return c.empty() ? out_dir() / "model.ufld" : std::filesystem::path(c);
}

std::filesystem::path RunConfig::manifest_path() const {
  const std::string& m = get("manifest");
  return m.empty() ? out_dir() / "manifest.csv" : std::filesystem::path(m);
}

std::string RunConfig::resolved_text() const {
  std::ostringstream os;
  for (const auto& [key, value] : values_) {
    std::string v = value;
    if (key == "train.decay_start" && parse_int(key, v) == 0)
      v = std::to_string(integer("train.total_iters") / 2);
    os << key << " = " << v << "\n";
  }
  return os.str();
}

void RunConfig::write_resolved(const std::filesystem::path& dir) const {
  std::ofstream os(dir / "resolved_config.txt", std::ios::trunc);
  if (!os) throw IoError("cannot write " + (dir / "resolved_config.txt").string());
  os << resolved_text();
}

}  // namespace unifield
