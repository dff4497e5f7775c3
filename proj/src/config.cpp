#include "fracphase/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>

#include "fracphase/error.hpp"

namespace fracphase {

InitialCondition InitialCondition::parse(const std::string& text) {
  if (text == "random") return {Kind::Random, {}};
  if (text == "sine") return {Kind::Sine, {}};
  if (text.starts_with("file:") && text.size() > 5) return {Kind::File, text.substr(5)};
  throw Error(ErrorCode::BadValue, "initial condition must be random, sine or file:PATH, got '" + text + "'");
}

std::string InitialCondition::to_string() const {
  switch (kind) {
    case Kind::Random: return "random";
    case Kind::Sine: return "sine";
    case Kind::File: return "file:" + path.string();
  }
  return "unknown";
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

struct Entry {
  std::string value;
  int line;
};

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"model", {"alpha", "eps", "ic", "seed"}},
      {"mesh", {"M", "N", "T", "a", "b", "kind", "gamma"}},
      {"solver", {"scheme", "fp_tol", "fp_max_iter"}},
      {"output", {"dir", "snapshot_every"}},
  };
  return keys;
}

class Reader {
 public:
  Reader(std::map<std::string, Entry> entries, std::string source)
      : entries_(std::move(entries)), source_(std::move(source)) {}

  const Entry* find(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

  const Entry& require(const std::string& key) const {
    if (const Entry* e = find(key)) return *e;
    throw Error(ErrorCode::MissingKey, source_ + ": required key '" + key + "' not set");
  }

  [[noreturn]] void fail(const Entry& e, const std::string& key, const std::string& what) const {
    throw Error(ErrorCode::BadValue, source_ + ":" + std::to_string(e.line) + ": " + key + ": " + what);
  }

  template <class T>
  T number(const std::string& key, const Entry& e) const {
    T v{};
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) fail(e, key, "not a number: '" + e.value + "'");
    return v;
  }

  template <class T>
  T get(const std::string& key) const {
    return number<T>(key, require(key));
  }

  template <class T>
  T get(const std::string& key, T fallback) const {
    const Entry* e = find(key);
    return e ? number<T>(key, *e) : fallback;
  }

 private:
  std::map<std::string, Entry> entries_;
  std::string source_;
};

}  // namespace

CliConfig parse_config(std::istream& in, const std::string& source) {
  std::map<std::string, Entry> entries;  // "section.key"
  std::string section;
  std::string raw;
  for (int line_no = 1; std::getline(in, raw); ++line_no) {
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    std::string line = raw;
    if (auto c = line.find_first_of("#;"); c != std::string::npos) line.erase(c);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorCode::BadValue, where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!known_keys().contains(section)) throw Error(ErrorCode::BadValue, where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::BadValue, where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) throw Error(ErrorCode::BadValue, where + "key '" + key + "' outside any section");
    if (!known_keys().at(section).contains(key))
      throw Error(ErrorCode::BadValue, where + "unknown key '" + key + "' in [" + section + "]");
    if (value.empty()) throw Error(ErrorCode::BadValue, where + "empty value for '" + key + "'");
    if (!entries.emplace(key, Entry{value, line_no}).second)
      throw Error(ErrorCode::BadValue, where + "duplicate key '" + key + "'");
  }

  const Reader r(std::move(entries), source);
  CliConfig out;
  RunConfig& c = out.run;
  c.alpha = r.get<double>("alpha");
  c.eps = r.get<double>("eps");
  const int m = r.get<int>("M");
  const int n = r.get<int>("N");
  const double t = r.get<double>("T");
  const Entry& scheme = r.require("scheme");
  try {
    c.scheme = parse_scheme(scheme.value);
  } catch (const Error&) {
    r.fail(scheme, "scheme", "unknown scheme '" + scheme.value + "'");
  }
  const double a = r.get<double>("a", 0.0);
  const double b = r.get<double>("b", 1.0);
  c.fp_tol = r.get<double>("fp_tol", 1e-6);
  c.fp_max_iter = r.get<int>("fp_max_iter", 100);
  if (const Entry* e = r.find("seed")) c.seed = r.number<std::uint64_t>("seed", *e);

  // Range checks with line numbers before the generic validation.
  auto check = [&](const std::string& key, bool ok, const std::string& what) {
    if (!ok) r.fail(r.require(key), key, what);
  };
  check("alpha", c.alpha > 0.0 && c.alpha <= 1.0, "must lie in (0, 1]");
  check("eps", c.eps > 0.0, "must be positive");
  check("M", m >= 2, "must be at least 2");
  check("N", n >= 0, "must be nonnegative");
  check("T", t > 0.0, "must be positive");
  if (r.find("fp_tol")) check("fp_tol", c.fp_tol > 0.0, "must be positive");
  if (r.find("fp_max_iter")) check("fp_max_iter", c.fp_max_iter >= 1, "must be at least 1");
  if (r.find("b") || r.find("a")) {
    if (!(b > a)) r.fail(r.find("b") ? *r.find("b") : *r.find("a"), "b", "domain needs b > a");
  }
  c.grid = Grid2D(a, b, m);

  std::string kind = "uniform";
  if (const Entry* e = r.find("kind")) {
    kind = e->value;
    if (kind != "uniform" && kind != "graded") r.fail(*e, "kind", "must be uniform or graded");
  }
  if (kind == "graded") {
    const double gamma = r.get<double>("gamma", 1.0);
    if (const Entry* e = r.find("gamma"); e && !(gamma >= 1.0)) r.fail(*e, "gamma", "must be >= 1");
    if (c.scheme != Scheme::L21Sigma)
      r.fail(*r.find("kind"), "kind", std::string(to_string(c.scheme)) + " requires a uniform time mesh");
    c.mesh = TimeMesh::graded(t, n, gamma);
  } else {
    if (const Entry* e = r.find("gamma"); e && r.number<double>("gamma", *e) != 1.0)
      r.fail(*e, "gamma", "grading exponent needs kind = graded");
    c.mesh = TimeMesh::uniform(t, n);
  }

  if (const Entry* e = r.find("ic")) {
    try {
      out.ic = InitialCondition::parse(e->value);
    } catch (const Error&) {
      r.fail(*e, "ic", "must be random, sine or file:PATH");
    }
  }
  if (const Entry* e = r.find("dir")) out.output_dir = e->value;
  out.snapshot_every = r.get<int>("snapshot_every", 0);
  if (const Entry* e = r.find("snapshot_every"); e && out.snapshot_every < 0) r.fail(*e, "snapshot_every", "must be >= 0");

  c.validate();
  return out;
}

CliConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  return parse_config(in, path.string());
}

}  // namespace fracphase
