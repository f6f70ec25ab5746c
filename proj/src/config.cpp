#include "saas/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "saas/errors.hpp"

namespace saas {

namespace {

[[noreturn]] void parse_error(int line, const std::string& what) {
  throw ConfigError(ConfigError::Kind::parse, "line " + std::to_string(line) + ": " + what);
}

[[noreturn]] void constraint_error(const std::string& key, const std::string& what) {
  throw ConfigError(ConfigError::Kind::constraint, key + ": " + what);
}

struct Entry {
  enum class Type { string, boolean, number, array } type;
  std::string text;                  // string contents or number literal
  bool flag = false;                 // boolean
  std::vector<std::string> numbers;  // array literals
  int line = 0;
  bool used = false;
};

using Section = std::map<std::string, Entry>;
using Document = std::map<std::string, Section>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool is_bare_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

bool looks_numeric(const std::string& s) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && s.find_first_of("nN") == std::string::npos;
}

Entry parse_value(const std::string& v, int line) {
  Entry e;
  e.line = line;
  if (v.empty()) parse_error(line, "missing value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') parse_error(line, "unterminated string");
    e.type = Entry::Type::string;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      if (v[i] == '\\' && i + 2 < v.size()) {
        const char c = v[++i];
        e.text += c == 'n' ? '\n' : c == 't' ? '\t' : c;
      } else if (v[i] == '"') {
        parse_error(line, "unexpected quote in string");
      } else {
        e.text += v[i];
      }
    }
    return e;
  }
  if (v == "true" || v == "false") {
    e.type = Entry::Type::boolean;
    e.flag = v == "true";
    return e;
  }
  if (v.front() == '[') {
    if (v.back() != ']') parse_error(line, "unterminated array");
    e.type = Entry::Type::array;
    std::stringstream ss(v.substr(1, v.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) {
        if (ss.eof()) break;  // trailing comma
        parse_error(line, "empty array element");
      }
      if (!looks_numeric(item)) parse_error(line, "array elements must be numbers, got '" + item + "'");
      e.numbers.push_back(item);
    }
    return e;
  }
  if (!looks_numeric(v)) parse_error(line, "cannot parse value '" + v + "'");
  e.type = Entry::Type::number;
  e.text = v;
  return e;
}

Document parse_document(const std::string& text) {
  Document doc;
  doc[""];
  std::string section;
  std::stringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[' && line.find('=') == std::string::npos) {
      if (line.back() != ']') parse_error(lineno, "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!is_bare_key(section)) parse_error(lineno, "bad section name '" + section + "'");
      if (doc.count(section) && !doc[section].empty()) parse_error(lineno, "duplicate section [" + section + "]");
      doc[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) parse_error(lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!is_bare_key(key)) parse_error(lineno, "bad key '" + key + "'");
    const int start = lineno;
    // Arrays may span lines.
    if (!value.empty() && value.front() == '[') {
      while (value.back() != ']') {
        if (!std::getline(in, raw)) parse_error(start, "unterminated array");
        ++lineno;
        value += " " + trim(strip_comment(raw));
      }
    }
    auto& sec = doc[section];
    if (sec.count(key)) parse_error(lineno, "duplicate key '" + key + "'");
    sec.emplace(key, parse_value(value, start));
  }
  return doc;
}

// Typed, use-tracking access to a parsed document.
class Reader {
 public:
  explicit Reader(Document doc) : doc_(std::move(doc)) {}

  Entry* find(const std::string& section, const std::string& key) {
    auto s = doc_.find(section);
    if (s == doc_.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    k->second.used = true;
    return &k->second;
  }

  static std::string name(const std::string& section, const std::string& key) {
    return section.empty() ? key : section + "." + key;
  }

  bool has(const std::string& section, const std::string& key) {
    auto s = doc_.find(section);
    return s != doc_.end() && s->second.count(key);
  }

  double real(const std::string& sec, const std::string& key, double def) {
    Entry* e = find(sec, key);
    if (!e) return def;
    if (e->type != Entry::Type::number) constraint_error(name(sec, key), "expected a number");
    return std::strtod(e->text.c_str(), nullptr);
  }

  std::uint64_t u64(const std::string& sec, const std::string& key, std::uint64_t def) {
    Entry* e = find(sec, key);
    if (!e) return def;
    if (e->type != Entry::Type::number) constraint_error(name(sec, key), "expected an integer");
    return to_u64(e->text, name(sec, key));
  }

  std::size_t size(const std::string& sec, const std::string& key, std::size_t def) {
    return static_cast<std::size_t>(u64(sec, key, def));
  }

  bool boolean(const std::string& sec, const std::string& key, bool def) {
    Entry* e = find(sec, key);
    if (!e) return def;
    if (e->type != Entry::Type::boolean) constraint_error(name(sec, key), "expected true or false");
    return e->flag;
  }

  std::string string(const std::string& sec, const std::string& key, const std::string& def) {
    Entry* e = find(sec, key);
    if (!e) return def;
    if (e->type != Entry::Type::string) constraint_error(name(sec, key), "expected a string");
    return e->text;
  }

  std::vector<double> reals(const std::string& sec, const std::string& key, std::vector<double> def) {
    Entry* e = find(sec, key);
    if (!e) return def;
    if (e->type != Entry::Type::array) constraint_error(name(sec, key), "expected an array");
    std::vector<double> out;
    for (const auto& n : e->numbers) out.push_back(std::strtod(n.c_str(), nullptr));
    return out;
  }

  std::vector<std::size_t> sizes(const std::string& sec, const std::string& key,
                                 std::vector<std::size_t> def) {
    Entry* e = find(sec, key);
    if (!e) return def;
    if (e->type != Entry::Type::array) constraint_error(name(sec, key), "expected an array");
    std::vector<std::size_t> out;
    for (const auto& n : e->numbers) out.push_back(static_cast<std::size_t>(to_u64(n, name(sec, key))));
    return out;
  }

  void reject_unknown() const {
    for (const auto& [sec, entries] : doc_)
      for (const auto& [key, e] : entries)
        if (!e.used)
          throw ConfigError(ConfigError::Kind::constraint,
                            "line " + std::to_string(e.line) + ": unknown key '" + name(sec, key) + "'");
  }

 private:
  static std::uint64_t to_u64(const std::string& text, const std::string& key) {
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
      constraint_error(key, "expected a non-negative integer, got '" + text + "'");
    errno = 0;
    const auto v = std::strtoull(text.c_str(), nullptr, 10);
    if (errno == ERANGE) constraint_error(key, "integer out of range");
    return v;
  }

  Document doc_;
};

template <typename E>
E pick(const std::string& key, const std::string& value,
       std::initializer_list<std::pair<const char*, E>> options) {
  std::string valid;
  for (const auto& [n, e] : options) {
    if (value == n) return e;
    valid += valid.empty() ? n : std::string(", ") + n;
  }
  constraint_error(key, "unknown value '" + value + "' (expected one of: " + valid + ")");
}

template <typename E>
const char* label(E value, std::initializer_list<std::pair<const char*, E>> options) {
  for (const auto& [n, e] : options)
    if (e == value) return n;
  return "?";
}

const std::initializer_list<std::pair<const char*, bench::DatasetKind>> kDatasetKinds{
    {"two_moons", bench::DatasetKind::two_moons},
    {"blobs", bench::DatasetKind::blobs},
    {"idx", bench::DatasetKind::idx},
    {"csv", bench::DatasetKind::csv}};
const std::initializer_list<std::pair<const char*, InitScale>> kInitScales{
    {"fan_in", InitScale::fan_in}, {"unit", InitScale::unit}};
const std::initializer_list<std::pair<const char*, ResampleMode>> kResampleModes{
    {"fresh_gaussian", ResampleMode::fresh_gaussian}, {"reset_to_w0", ResampleMode::reset_to_w0}};
const std::initializer_list<std::pair<const char*, DeltaScale>> kDeltaScales{
    {"batch_mean", DeltaScale::batch_mean}, {"per_sample", DeltaScale::per_sample}};
const std::initializer_list<std::pair<const char*, CorruptionMode>> kCorruptionModes{
    {"uniform", CorruptionMode::uniform}, {"wrong_class", CorruptionMode::wrong_class}};

std::vector<std::size_t> default_arch(const bench::DatasetSpec& d) {
  switch (d.kind) {
    case bench::DatasetKind::two_moons:
      return {2, 32, 32, 2};
    case bench::DatasetKind::blobs:
      return {d.dim, 32, 32, d.classes};
    case bench::DatasetKind::idx:
      return {784, 128, 10};
    case bench::DatasetKind::csv:
      break;
  }
  constraint_error("saas.arch", "required for csv datasets");
}

void check(bool ok, const std::string& key, const std::string& what) {
  if (!ok) constraint_error(key, what);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

template <typename T>
std::string array(const std::vector<T>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>)
      out += num(v[i]);
    else
      out += std::to_string(v[i]);
  }
  return out + "]";
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  Reader r(parse_document(text));
  RunConfig c;

  if (!r.has("", "master_seed")) constraint_error("master_seed", "required key is missing");
  c.saas.master_seed = r.u64("", "master_seed", 0);

  // [dataset]
  if (!r.has("dataset", "kind")) constraint_error("dataset.kind", "required key is missing");
  auto& d = c.dataset;
  d.kind = pick("dataset.kind", r.string("dataset", "kind", ""), kDatasetKinds);
  d.n = r.size("dataset", "n", d.n);
  d.noise = r.real("dataset", "noise", d.noise);
  d.classes = r.size("dataset", "classes", d.classes);
  d.dim = r.size("dataset", "dim", d.dim);
  d.separation = r.real("dataset", "separation", d.separation);
  d.images_path = r.string("dataset", "images", d.images_path);
  d.labels_path = r.string("dataset", "labels", d.labels_path);
  d.csv_path = r.string("dataset", "path", d.csv_path);
  d.max_samples = r.size("dataset", "max_samples", d.max_samples);
  check(d.noise >= 0.0, "dataset.noise", "must be >= 0");
  if (d.kind == bench::DatasetKind::two_moons) check(d.n >= 2, "dataset.n", "must be >= 2");
  if (d.kind == bench::DatasetKind::blobs) {
    check(d.classes >= 2, "dataset.classes", "must be >= 2");
    check(d.dim >= 1, "dataset.dim", "must be >= 1");
    check(d.n >= 1, "dataset.n", "must be >= 1");
  }
  if (d.kind == bench::DatasetKind::idx) {
    check(!d.images_path.empty(), "dataset.images", "required for idx datasets");
    check(!d.labels_path.empty(), "dataset.labels", "required for idx datasets");
  }
  if (d.kind == bench::DatasetKind::csv) check(!d.csv_path.empty(), "dataset.path", "required for csv datasets");

  // [split]
  auto& s = c.split;
  s.sizes.labeled = r.size("split", "labeled", s.sizes.labeled);
  s.sizes.unlabeled = r.size("split", "unlabeled", s.sizes.unlabeled);
  s.sizes.validation = r.size("split", "validation", s.sizes.validation);
  s.sizes.test = r.size("split", "test", s.sizes.test);
  s.options.balanced = r.boolean("split", "balanced", s.options.balanced);
  s.options.union_labeled = r.boolean("split", "union_labeled", s.options.union_labeled);

  // [saas]
  auto& a = c.saas;
  a.arch = r.sizes("saas", "arch", {});
  if (a.arch.empty()) a.arch = default_arch(d);
  a.init_scale = pick("saas.init_scale", r.string("saas", "init_scale", "fan_in"), kInitScales);
  a.inner_steps = r.size("saas", "inner_steps", a.inner_steps);
  a.inner_epochs = r.size("saas", "inner_epochs", a.inner_epochs);
  a.outer_epochs = r.size("saas", "outer_epochs", a.outer_epochs);
  a.eta_w = r.real("saas", "eta_w", a.eta_w);
  a.eta_pu = r.real("saas", "eta_pu", a.eta_pu);
  a.beta = r.real("saas", "beta", a.beta);
  a.alpha_floor = r.real("saas", "alpha_floor", a.alpha_floor);
  a.batch_u = r.size("saas", "batch_u", a.batch_u);
  a.batch_l = r.size("saas", "batch_l", a.batch_l);
  a.momentum = r.real("saas", "momentum", a.momentum);
  a.langevin_variance = r.real("saas", "langevin_variance", 1e-5 * a.eta_w);
  a.resample_mode = pick("saas.resample_mode", r.string("saas", "resample_mode", "fresh_gaussian"), kResampleModes);
  a.delta_scale = pick("saas.delta_scale", r.string("saas", "delta_scale", "batch_mean"), kDeltaScales);
  a.early_stop_tv = r.real("saas", "early_stop_tv", a.early_stop_tv);
  const std::string aug = r.string("saas", "augmentation", "identity");
  const double jitter = r.real("saas", "jitter_sigma", 0.0);
  const std::uint64_t shift = r.u64("saas", "max_shift", 0);
  const bool flip = r.boolean("saas", "flip", false);
  if (aug == "identity") {
    a.augmentation = IdentityAug{};
  } else if (aug == "gaussian_jitter") {
    check(jitter >= 0.0, "saas.jitter_sigma", "must be >= 0");
    a.augmentation = GaussianJitter{jitter};
  } else if (aug == "translate_flip") {
    a.augmentation = TranslateFlip{static_cast<int>(shift), flip};
  } else {
    constraint_error("saas.augmentation", "unknown value '" + aug +
                                              "' (expected one of: identity, gaussian_jitter, translate_flip)");
  }

  check(a.arch.size() >= 2, "saas.arch", "needs at least 2 sizes");
  for (auto v : a.arch) check(v >= 1, "saas.arch", "sizes must be >= 1");
  check(a.eta_w > 0.0, "saas.eta_w", "must be > 0");
  check(a.eta_pu >= 0.0, "saas.eta_pu", "must be >= 0");
  check(a.beta >= 0.0, "saas.beta", "must be >= 0");
  const std::size_t K = a.arch.back();
  check(a.alpha_floor >= 0.0 && a.alpha_floor <= 1.0 / static_cast<double>(K), "saas.alpha_floor",
        "must be in [0, 1/K]");
  check(a.inner_steps >= 1 || a.inner_epochs >= 1, "saas.inner_epochs", "must be >= 1 when inner_steps is 0");
  check(a.batch_u >= 1, "saas.batch_u", "must be >= 1");
  check(a.batch_l >= 1, "saas.batch_l", "must be >= 1");
  check(a.momentum >= 0.0 && a.momentum < 1.0, "saas.momentum", "must be in [0, 1)");
  check(a.langevin_variance >= 0.0, "saas.langevin_variance", "must be >= 0");
  check(a.early_stop_tv >= 0.0, "saas.early_stop_tv", "must be >= 0");
  if (d.kind == bench::DatasetKind::two_moons) check(K == 2, "saas.arch", "two_moons needs 2 outputs");
  if (d.kind == bench::DatasetKind::two_moons) check(a.arch.front() == 2, "saas.arch", "two_moons needs 2 inputs");
  if (d.kind == bench::DatasetKind::blobs) {
    check(K == d.classes, "saas.arch", "output size must equal dataset.classes");
    check(a.arch.front() == d.dim, "saas.arch", "input size must equal dataset.dim");
  }
  if (s.options.balanced) check(s.sizes.labeled % K == 0, "split.labeled", "must be a multiple of K when balanced");

  // [phase2]
  auto& p2 = a.phase2;
  p2.lr0 = r.real("phase2", "lr0", p2.lr0);
  p2.halve_after_epochs = r.size("phase2", "halve_after_epochs", p2.halve_after_epochs);
  p2.lr_stop = r.real("phase2", "lr_stop", p2.lr_stop);
  p2.max_epochs = r.size("phase2", "max_epochs", p2.max_epochs);
  check(p2.lr0 > 0.0, "phase2.lr0", "must be > 0");
  check(p2.halve_after_epochs >= 1, "phase2.halve_after_epochs", "must be >= 1");
  check(p2.lr_stop > 0.0, "phase2.lr_stop", "must be > 0");
  check(p2.max_epochs >= 1, "phase2.max_epochs", "must be >= 1");

  // [corruption]
  auto& co = c.corruption;
  co.fractions = r.reals("corruption", "fractions", co.fractions);
  co.n_seeds = r.size("corruption", "n_seeds", co.n_seeds);
  co.epochs_budget = r.size("corruption", "epochs_budget", co.epochs_budget);
  co.lr = r.real("corruption", "lr", co.lr);
  co.batch_size = r.size("corruption", "batch_size", co.batch_size);
  co.mode = pick("corruption.mode", r.string("corruption", "mode", "uniform"), kCorruptionModes);
  check(!co.fractions.empty(), "corruption.fractions", "must not be empty");
  for (double f : co.fractions) check(f >= 0.0 && f <= 1.0, "corruption.fractions", "entries must lie in [0, 1]");
  check(co.n_seeds >= 1, "corruption.n_seeds", "must be >= 1");
  check(co.epochs_budget >= 1, "corruption.epochs_budget", "must be >= 1");
  check(co.lr > 0.0, "corruption.lr", "must be > 0");
  check(co.batch_size >= 1, "corruption.batch_size", "must be >= 1");

  // [outer_epoch]
  auto& oe = c.outer_epoch;
  oe.m_list = r.sizes("outer_epoch", "m_list", oe.m_list);
  oe.probe_epochs = r.size("outer_epoch", "probe_epochs", oe.probe_epochs);
  oe.n_seeds = r.size("outer_epoch", "n_seeds", oe.n_seeds);
  oe.probe_lr = r.real("outer_epoch", "probe_lr", oe.probe_lr);
  oe.probe_batch = r.size("outer_epoch", "probe_batch", oe.probe_batch);
  check(!oe.m_list.empty(), "outer_epoch.m_list", "must not be empty");
  check(oe.probe_epochs >= bench::kProbeEpoch, "outer_epoch.probe_epochs", "must be >= 2");
  check(oe.n_seeds >= 1, "outer_epoch.n_seeds", "must be >= 1");
  check(oe.probe_lr > 0.0, "outer_epoch.probe_lr", "must be > 0");
  check(oe.probe_batch >= 1, "outer_epoch.probe_batch", "must be >= 1");

  // [sweep]
  c.sweep.unlabeled_counts = r.sizes("sweep", "unlabeled_counts", c.sweep.unlabeled_counts);
  c.sweep.n_seeds = r.size("sweep", "n_seeds", c.sweep.n_seeds);
  check(!c.sweep.unlabeled_counts.empty(), "sweep.unlabeled_counts", "must not be empty");
  check(c.sweep.n_seeds >= 1, "sweep.n_seeds", "must be >= 1");

  // [run]
  c.n_seeds = r.size("run", "n_seeds", c.n_seeds);
  c.output_dir = r.string("run", "output_dir", c.output_dir);
  c.jobs = r.size("run", "jobs", c.jobs);
  check(c.n_seeds >= 1, "run.n_seeds", "must be >= 1");
  check(c.jobs >= 1, "run.jobs", "must be >= 1");

  r.reject_unknown();
  return c;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(ConfigError::Kind::missing_file, "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream o;
  const auto& d = c.dataset;
  const auto& a = c.saas;
  o << "master_seed = " << a.master_seed << "\n\n[dataset]\n"
    << "kind = " << quoted(label(d.kind, kDatasetKinds)) << "\n"
    << "n = " << d.n << "\nnoise = " << num(d.noise) << "\nclasses = " << d.classes
    << "\ndim = " << d.dim << "\nseparation = " << num(d.separation)
    << "\nimages = " << quoted(d.images_path) << "\nlabels = " << quoted(d.labels_path)
    << "\npath = " << quoted(d.csv_path) << "\nmax_samples = " << d.max_samples << "\n\n";

  const auto& s = c.split;
  o << "[split]\nlabeled = " << s.sizes.labeled << "\nunlabeled = " << s.sizes.unlabeled
    << "\nvalidation = " << s.sizes.validation << "\ntest = " << s.sizes.test
    << "\nbalanced = " << (s.options.balanced ? "true" : "false")
    << "\nunion_labeled = " << (s.options.union_labeled ? "true" : "false") << "\n\n";

  o << "[saas]\narch = " << array(a.arch) << "\ninit_scale = " << quoted(label(a.init_scale, kInitScales))
    << "\ninner_steps = " << a.inner_steps << "\ninner_epochs = " << a.inner_epochs
    << "\nouter_epochs = " << a.outer_epochs << "\neta_w = " << num(a.eta_w)
    << "\neta_pu = " << num(a.eta_pu) << "\nbeta = " << num(a.beta)
    << "\nalpha_floor = " << num(a.alpha_floor) << "\nbatch_u = " << a.batch_u
    << "\nbatch_l = " << a.batch_l << "\nmomentum = " << num(a.momentum)
    << "\nlangevin_variance = " << num(a.langevin_variance)
    << "\nresample_mode = " << quoted(label(a.resample_mode, kResampleModes))
    << "\ndelta_scale = " << quoted(label(a.delta_scale, kDeltaScales))
    << "\nearly_stop_tv = " << num(a.early_stop_tv) << "\n";
  if (const auto* j = std::get_if<GaussianJitter>(&a.augmentation)) {
    o << "augmentation = \"gaussian_jitter\"\njitter_sigma = " << num(j->sigma) << "\n";
  } else if (const auto* t = std::get_if<TranslateFlip>(&a.augmentation)) {
    o << "augmentation = \"translate_flip\"\nmax_shift = " << t->max_shift
      << "\nflip = " << (t->flip ? "true" : "false") << "\n";
  } else {
    o << "augmentation = \"identity\"\n";
  }

  const auto& p2 = a.phase2;
  o << "\n[phase2]\nlr0 = " << num(p2.lr0) << "\nhalve_after_epochs = " << p2.halve_after_epochs
    << "\nlr_stop = " << num(p2.lr_stop) << "\nmax_epochs = " << p2.max_epochs << "\n\n";

  const auto& co = c.corruption;
  o << "[corruption]\nfractions = " << array(co.fractions) << "\nn_seeds = " << co.n_seeds
    << "\nepochs_budget = " << co.epochs_budget << "\nlr = " << num(co.lr)
    << "\nbatch_size = " << co.batch_size << "\nmode = " << quoted(label(co.mode, kCorruptionModes)) << "\n\n";

  const auto& oe = c.outer_epoch;
  o << "[outer_epoch]\nm_list = " << array(oe.m_list) << "\nprobe_epochs = " << oe.probe_epochs
    << "\nn_seeds = " << oe.n_seeds << "\nprobe_lr = " << num(oe.probe_lr)
    << "\nprobe_batch = " << oe.probe_batch << "\n\n";

  o << "[sweep]\nunlabeled_counts = " << array(c.sweep.unlabeled_counts)
    << "\nn_seeds = " << c.sweep.n_seeds << "\n\n";

  o << "[run]\nn_seeds = " << c.n_seeds << "\noutput_dir = " << quoted(c.output_dir)
    << "\njobs = " << c.jobs << "\n";
  return o.str();
}

nlohmann::ordered_json config_to_json(const RunConfig& c) {
  RunConfig echo = c;
  echo.output_dir.clear();
  echo.jobs = 1;
  // The JSON mirrors the canonical file layout.
  nlohmann::ordered_json j;
  const Document doc = parse_document(serialize_config(echo));
  for (const auto& [section, entries] : doc) {
    if (section == "run") continue;
    nlohmann::ordered_json sec;
    for (const auto& [key, e] : entries) {
      switch (e.type) {
        case Entry::Type::string:
          sec[key] = e.text;
          break;
        case Entry::Type::boolean:
          sec[key] = e.flag;
          break;
        case Entry::Type::number:
          if (e.text.find_first_of(".eE") == std::string::npos)
            sec[key] = std::strtoull(e.text.c_str(), nullptr, 10);
          else
            sec[key] = std::strtod(e.text.c_str(), nullptr);
          break;
        case Entry::Type::array: {
          auto arr = nlohmann::ordered_json::array();
          for (const auto& n : e.numbers) {
            if (n.find_first_of(".eE") == std::string::npos)
              arr.push_back(std::strtoull(n.c_str(), nullptr, 10));
            else
              arr.push_back(std::strtod(n.c_str(), nullptr));
          }
          sec[key] = arr;
          break;
        }
      }
    }
    if (section.empty()) {
      for (auto& [k, v] : sec.items()) j[k] = v;
    } else {
      j[section] = sec;
    }
  }
  j["n_seeds"] = c.n_seeds;
  return j;
}

}  // namespace saas
