#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <pujoint/errors.hpp>

namespace pujoint::cli {

namespace {

std::string location(const std::string& file, int line, int column) {
  std::string s = file;
  if (line > 0) s += ":" + std::to_string(line);
  if (column > 0) s += ":" + std::to_string(column);
  return s;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

// Drops a trailing "# ..." or "; ..." comment.
std::string_view strip_comment(std::string_view line) {
  const auto pos = line.find_first_of("#;");
  return pos == std::string_view::npos ? line : line.substr(0, pos);
}

std::pair<std::size_t, std::size_t> trim_range(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return {b, e};
}

class Reader {
 public:
  Reader(const IniDocument& doc, const std::string& section) : doc_(doc), section_(section) {
    auto it = doc.sections.find(section);
    if (it != doc.sections.end()) entries_ = &it->second;
  }

  bool has(const std::string& key) const { return entries_ && entries_->count(key); }

  const Entry* find(const std::string& key) {
    if (!entries_) return nullptr;
    auto it = entries_->find(key);
    if (it == entries_->end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  [[noreturn]] void fail(const Entry& e, const std::string& msg) const {
    throw ConfigError(doc_.file, e.line, e.column, "[" + section_ + "] " + msg);
  }

  template <class T>
  T number(const Entry& e, std::string_view text, const std::string& key) const {
    T v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
      fail(e, "'" + key + "' expects a number, got '" + std::string(text) + "'");
    return v;
  }

  template <class T>
  void get(const std::string& key, T& out) {
    const Entry* e = find(key);
    if (e) out = number<T>(*e, e->value, key);
  }

  template <class T>
  void get(const std::string& key, std::optional<T>& out) {
    const Entry* e = find(key);
    if (e) out = number<T>(*e, e->value, key);
  }

  void get(const std::string& key, std::string& out) {
    if (const Entry* e = find(key)) out = e->value;
  }

  void get(const std::string& key, bool& out) {
    const Entry* e = find(key);
    if (!e) return;
    if (e->value == "true" || e->value == "1" || e->value == "yes") out = true;
    else if (e->value == "false" || e->value == "0" || e->value == "no") out = false;
    else fail(*e, "'" + key + "' expects true or false, got '" + e->value + "'");
  }

  void get(const std::string& key, std::filesystem::path& out) {
    if (const Entry* e = find(key)) out = e->value;
  }

  std::vector<std::string> list(const Entry& e) const {
    std::vector<std::string> items;
    std::string_view rest = e.value;
    while (true) {
      const auto comma = rest.find(',');
      auto item = rest.substr(0, comma);
      auto [b, en] = trim_range(item);
      if (en == b) fail(e, "empty list item in '" + e.value + "'");
      items.emplace_back(item.substr(b, en - b));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    return items;
  }

  template <class T>
  void get_list(const std::string& key, std::vector<T>& out) {
    const Entry* e = find(key);
    if (!e) return;
    out.clear();
    for (const auto& item : list(*e)) out.push_back(number<T>(*e, item, key));
  }

  // Parses enumerations through the core parsers, reporting their message at the entry.
  template <class F>
  auto parsed(const Entry& e, const std::string& text, F&& parse) const {
    try {
      return parse(text);
    } catch (const ArgumentError& ex) {
      fail(e, ex.what());
    }
  }

  void reject_unknown() const {
    if (!entries_) return;
    for (const auto& [key, entry] : *entries_)
      if (!used_.count(key))
        throw ConfigError(doc_.file, entry.line, entry.key_column, "[" + section_ + "] unknown key '" + key + "'");
  }

 private:
  const IniDocument& doc_;
  std::string section_;
  const std::map<std::string, Entry>* entries_ = nullptr;
  std::set<std::string> used_;
};

void apply_train_section(Reader& r, TrainConfig& c) {
  r.get("learning_rate", c.learning_rate);
  r.get("batch_size", c.batch_size);
  r.get("batch_count", c.batch_count);
  r.get("epochs", c.epochs);
  r.get("beta1", c.beta1);
  r.get("beta2", c.beta2);
  r.get("epsilon", c.epsilon);
  if (const Entry* e = r.find("risk_surrogate")) c.risk_surrogate = r.parsed(*e, e->value, parse_surrogate);
  r.get("ascent_threshold", c.ascent_threshold);
  r.get("update_start", c.update_start);
  r.get("window", c.window);
  r.get("lambda_init", c.lambda_init);
  r.get("alpha", c.alpha);
  r.get("beta", c.beta);
  if (const Entry* e = r.find("positive_surrogate")) c.positive_surrogate = r.parsed(*e, e->value, parse_surrogate);
  r.get("fixed_lambda", c.fixed_lambda);
  r.get("freeze_labels", c.freeze_labels);
  r.get_list("hidden", c.hidden);
  if (const Entry* e = r.find("activation")) c.activation = r.parsed(*e, e->value, parse_activation);
}

bool is_train_section(const std::string& name) { return name == "train" || name.rfind("train.", 0) == 0 || name.rfind("train@", 0) == 0; }

std::string prior_suffix(double prior) {
  std::ostringstream s;
  s << prior;
  return "@" + s.str();
}

}  // namespace

ConfigError::ConfigError(const std::string& file, int line, int column, const std::string& message)
    : std::runtime_error(location(file, line, column) + ": " + message), line_(line), column_(column) {}

IniDocument parse_ini(const std::string& text, const std::string& file) {
  IniDocument doc;
  doc.file = file;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = strip_comment(raw);
    auto [b, e] = trim_range(line);
    if (b == e) continue;
    if (line[b] == '[') {
      if (line[e - 1] != ']') throw ConfigError(file, line_no, static_cast<int>(e), "expected ']' to close section header");
      auto name_view = line.substr(b + 1, e - b - 2);
      auto [nb, ne] = trim_range(name_view);
      section = std::string(name_view.substr(nb, ne - nb));
      if (section.empty()) throw ConfigError(file, line_no, static_cast<int>(b + 1), "empty section name");
      if (doc.sections.count(section))
        throw ConfigError(file, line_no, static_cast<int>(b + 1), "duplicate section [" + section + "]");
      doc.sections[section];
      doc.section_order.push_back(section);
      doc.section_lines[section] = line_no;
      continue;
    }
    const auto eq = line.find('=', b);
    if (eq == std::string_view::npos || eq >= e)
      throw ConfigError(file, line_no, static_cast<int>(b + 1), "expected 'key = value'");
    if (section.empty()) throw ConfigError(file, line_no, static_cast<int>(b + 1), "key outside of any section");
    auto key_view = line.substr(b, eq - b);
    auto [kb, ke] = trim_range(key_view);
    if (kb == ke) throw ConfigError(file, line_no, static_cast<int>(b + 1), "missing key before '='");
    auto value_view = line.substr(eq + 1, e - eq - 1);
    auto [vb, ve] = trim_range(value_view);
    Entry entry;
    entry.value = std::string(value_view.substr(vb, ve - vb));
    entry.line = line_no;
    entry.key_column = static_cast<int>(b + kb + 1);
    entry.column = static_cast<int>(eq + 1 + vb + 1);
    if (entry.value.empty()) throw ConfigError(file, line_no, entry.column, "missing value");
    std::string key(key_view.substr(kb, ke - kb));
    auto& sec = doc.sections[section];
    if (sec.count(key)) throw ConfigError(file, line_no, entry.key_column, "duplicate key '" + key + "'");
    sec.emplace(std::move(key), std::move(entry));
  }
  return doc;
}

ExperimentConfig parse_experiment(const std::string& text, const std::string& file) {
  ExperimentConfig c;
  c.document = parse_ini(text, file);
  const IniDocument& doc = c.document;

  for (const auto& name : doc.section_order) {
    if (name == "experiment" || name == "dataset" || name == "model" || is_train_section(name)) continue;
    throw ConfigError(file, doc.section_lines.at(name), 1, "unknown section [" + name + "]");
  }

  {
    Reader r(doc, "experiment");
    r.get("name", c.name);
    r.get("trials", c.trials);
    r.get("base_seed", c.base_seed);
    r.get("prior", c.prior);
    r.get_list("priors", c.priors);
    if (const Entry* e = r.find("output")) c.output = e->value;
    r.get("val_fraction", c.val_fraction);
    r.reject_unknown();
    if (c.trials == 0) r.fail(*r.find("trials"), "'trials' must be positive");
    if (c.prior && !(*c.prior > 0.0 && *c.prior < 1.0)) r.fail(*r.find("prior"), "'prior' must lie in (0,1)");
    for (double p : c.priors)
      if (!(p > 0.0 && p < 1.0)) r.fail(*r.find("priors"), "every prior must lie in (0,1)");
    if (!(c.val_fraction > 0.0 && c.val_fraction < 1.0))
      r.fail(*r.find("val_fraction"), "'val_fraction' must lie in (0,1)");
  }

  {
    Reader r(doc, "dataset");
    DatasetConfig& d = c.dataset;
    if (const Entry* e = r.find("source")) {
      d.source = e->value;
      if (d.source != "synthetic" && d.source != "csv" && d.source != "idx")
        r.fail(*e, "unknown source '" + d.source + "' (expected synthetic, csv or idx)");
    }
    if (const Entry* e = r.find("kind")) d.synthetic.kind = r.parsed(*e, e->value, parse_synthetic_kind);
    r.get("dim", d.synthetic.dim);
    r.get("separation", d.synthetic.separation);
    r.get("noise", d.synthetic.noise);
    r.get("n_p", d.n_p);
    r.get("n_u", d.n_u);
    r.get("n_test", d.n_test);
    r.get("path", d.path);
    r.get("test_path", d.test_path);
    r.get("images", d.images);
    r.get("labels", d.labels);
    r.get("test_images", d.test_images);
    r.get("test_labels", d.test_labels);
    if (const Entry* e = r.find("positive_classes")) {
      d.positive_classes.clear();
      for (const auto& item : r.list(*e)) {
        int digit = r.number<int>(*e, item, "positive_classes");
        if (digit < 0 || digit > 9) r.fail(*e, "positive class " + item + " is not a digit 0..9");
        d.positive_classes.insert(digit);
      }
    }
    r.reject_unknown();

    // relative data paths resolve against the config file's directory
    const auto base = std::filesystem::path(file).parent_path();
    for (auto* p : {&d.path, &d.test_path, &d.images, &d.labels, &d.test_images, &d.test_labels})
      if (!p->empty() && p->is_relative()) *p = base / *p;

    auto need = [&](const std::filesystem::path& p, const char* key) {
      if (p.empty())
        throw ConfigError(file, doc.section_lines.count("dataset") ? doc.section_lines.at("dataset") : 0, 0,
                          "[dataset] source '" + d.source + "' requires '" + key + "'");
    };
    if (d.source == "csv") {
      need(d.path, "path");
      need(d.test_path, "test_path");
    } else if (d.source == "idx") {
      need(d.images, "images");
      need(d.labels, "labels");
      need(d.test_images, "test_images");
      need(d.test_labels, "test_labels");
    }
  }

  {
    Reader r(doc, "model");
    TrainConfig dummy;
    r.get_list("hidden", dummy.hidden);
    if (const Entry* e = r.find("activation")) r.parsed(*e, e->value, parse_activation);
    r.reject_unknown();
  }

  {
    Reader r(doc, "train");
    if (const Entry* e = r.find("methods")) {
      c.methods.clear();
      for (const auto& m : r.list(*e)) {
        auto method = r.parsed(*e, m, parse_method);
        if (std::find(c.methods.begin(), c.methods.end(), method) != c.methods.end())
          r.fail(*e, "method '" + m + "' listed twice");
        c.methods.push_back(method);
      }
    }
    if (const Entry* e = r.find("inits")) {
      c.inits.clear();
      for (const auto& m : r.list(*e)) {
        auto init = r.parsed(*e, m, parse_init_strategy);
        if (std::find(c.inits.begin(), c.inits.end(), init) != c.inits.end())
          r.fail(*e, "init '" + m + "' listed twice");
        c.inits.push_back(init);
      }
    }
  }

  // Every train section must only hold known keys; methods in section names must exist.
  for (const auto& name : doc.section_order) {
    if (!is_train_section(name)) continue;
    std::string rest = name.substr(5);
    const auto at = rest.find('@');
    std::string method_part = rest.substr(0, at);
    if (!method_part.empty()) {
      const std::string m = method_part.substr(1);
      try {
        parse_method(m);
      } catch (const ArgumentError& ex) {
        throw ConfigError(file, doc.section_lines.at(name), 1, "section [" + name + "]: " + ex.what());
      }
    }
    if (at != std::string::npos) {
      const std::string p = rest.substr(at + 1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), v);
      if (ec != std::errc() || ptr != p.data() + p.size() || !(v > 0.0 && v < 1.0))
        throw ConfigError(file, doc.section_lines.at(name), 1, "section [" + name + "]: bad prior suffix '" + p + "'");
    }
    Reader r(doc, name);
    TrainConfig dummy;
    if (name == "train") {
      r.find("methods");
      r.find("inits");
    }
    apply_train_section(r, dummy);
    r.reject_unknown();
  }

  // Validate the resolved config of every method at every prior it will run under.
  std::vector<std::optional<double>> priors;
  if (c.priors.empty()) priors.push_back(c.prior);
  for (double p : c.priors) priors.push_back(p);
  for (const auto& p : priors)
    for (Method m : c.methods) {
      try {
        c.train_config(m, p).validate(m);
      } catch (const ArgumentError& ex) {
        throw ConfigError(file, 0, 0, "training settings for " + std::string(to_string(m)) + ": " + ex.what());
      }
    }
  return c;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), 0, 0, "cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment(buf.str(), path.string());
}

TrainConfig ExperimentConfig::train_config(Method method, std::optional<double> prior) const {
  TrainConfig c;
  {
    Reader r(document, "model");
    r.get_list("hidden", c.hidden);
    if (const Entry* e = r.find("activation")) c.activation = parse_activation(e->value);
  }
  const std::string m(to_string(method));
  std::vector<std::string> sections{"train", "train." + m};
  if (prior) {
    sections.push_back("train" + prior_suffix(*prior));
    sections.push_back("train." + m + prior_suffix(*prior));
  }
  for (const auto& s : sections) {
    Reader r(document, s);
    apply_train_section(r, c);
  }
  return c;
}

std::vector<MethodSpec> ExperimentConfig::method_specs(std::optional<double> prior) const {
  std::vector<MethodSpec> specs;
  for (Method m : methods) {
    if (m == Method::joint) {
      for (InitStrategy init : inits) specs.push_back(MethodSpec::make(m, init, train_config(m, prior)));
    } else {
      specs.push_back(MethodSpec::make(m, std::nullopt, train_config(m, prior)));
    }
  }
  return specs;
}

namespace {

struct FilePool {
  std::shared_ptr<const LabeledDataset> pool, test;
};

FilePool load_pool(const DatasetConfig& d) {
  FilePool f;
  if (d.source == "csv") {
    f.pool = std::make_shared<const LabeledDataset>(load_csv(d.path));
    f.test = std::make_shared<const LabeledDataset>(load_csv(d.test_path));
  } else {
    f.pool = std::make_shared<const LabeledDataset>(load_idx(d.images, d.labels, d.positive_classes));
    f.test = std::make_shared<const LabeledDataset>(load_idx(d.test_images, d.test_labels, d.positive_classes));
  }
  return f;
}

}  // namespace

double resolve_prior(const ExperimentConfig& config, std::optional<double> prior_override) {
  if (prior_override) return *prior_override;
  if (config.prior) return *config.prior;
  if (config.dataset.source == "synthetic")
    throw ConfigError(config.document.file, 0, 0, "[experiment] 'prior' is required for synthetic data");
  return load_pool(config.dataset).pool->positive_fraction();
}

TrialDataFactory make_factory(const ExperimentConfig& config, double prior) {
  const DatasetConfig& d = config.dataset;
  if (d.source == "synthetic")
    return synthetic_trial_factory(d.synthetic, d.n_p, d.n_u, d.n_test, prior, config.val_fraction);
  auto f = load_pool(d);
  return pool_trial_factory(f.pool, f.test, d.n_p, d.n_u, prior, config.val_fraction);
}

}  // namespace pujoint::cli
