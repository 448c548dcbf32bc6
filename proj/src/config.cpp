// SPDX-License-Identifier: Apache-2.0
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "heal/error.hpp"
#include "heal/simulator.hpp"

namespace heal {

std::string_view to_string(TrainMode m) {
  switch (m) {
    case TrainMode::FewShot: return "fewshot";
    case TrainMode::FullShot: return "fullshot";
    case TrainMode::OnlyGeneral: return "onlygeneral";
    case TrainMode::Hybrid: return "hybrid";
    case TrainMode::Heal: return "heal";
  }
  return "hybrid";
}

TrainMode parse_mode(std::string_view s) {
  for (auto m : {TrainMode::FewShot, TrainMode::FullShot, TrainMode::OnlyGeneral, TrainMode::Hybrid, TrainMode::Heal}) {
    if (s == to_string(m)) return m;
  }
  throw ValidationError("unknown mode '" + std::string(s) + "' (expected fewshot|fullshot|onlygeneral|hybrid|heal)");
}

std::string_view to_string(CurveWeighting w) { return w == CurveWeighting::Token ? "token" : "sequence"; }

CurveWeighting parse_weighting(std::string_view s) {
  if (s == "token") return CurveWeighting::Token;
  if (s == "sequence") return CurveWeighting::Sequence;
  throw ValidationError("unknown entropy_curve_weighting '" + std::string(s) + "' (expected token|sequence)");
}

void validate(const TrainConfig& c) {
  auto fail = [](const std::string& what) { throw ValidationError("config: " + what); };
  if (c.mode == TrainMode::Heal && c.n_general == 0) fail("mode=heal requires n_general > 0");
  if ((c.mode == TrainMode::FewShot || c.mode == TrainMode::FullShot || c.mode == TrainMode::Hybrid ||
       c.mode == TrainMode::Heal) && c.n_target == 0) {
    fail("n_target must be positive for mode " + std::string(to_string(c.mode)));
  }
  if (c.mode == TrainMode::OnlyGeneral && c.n_general == 0) fail("mode=onlygeneral requires n_general > 0");
  if (c.rollouts_per_prompt < 2) fail("rollouts_per_prompt must be >= 2 for group advantages");
  if (!(c.temperature > 0.0) || !std::isfinite(c.temperature)) fail("temperature must be positive");
  if (c.batch_size == 0) fail("batch_size must be positive");
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) fail("learning_rate must be >= 0");
  if (c.max_len == 0) fail("max_len must be positive");
  if (c.context_window < 1 || c.context_window > 3) fail("context_window must be in [1, 3]");
  if (c.log_interval == 0) fail("log_interval must be positive");
  if (c.target_fraction > 1.0 || std::isnan(c.target_fraction)) fail("target_fraction must be <= 1 (negative = proportional)");
  if (c.selection_pool_factor == 0) fail("selection_pool_factor must be positive");
  if (c.ppo_epochs == 0) fail("ppo_epochs must be positive");
  if (!(c.reg.gamma > 0.0 && c.reg.gamma <= 1.0)) fail("gamma must be in (0, 1]");
  if (!(c.reg.k_frac > 0.0 && c.reg.k_frac <= 1.0)) fail("k_frac must be in (0, 1]");
  if (!(c.reg.eps_low > 0.0) || !(c.reg.eps_high > 0.0)) fail("eps_low and eps_high must be positive");
  if (!(c.reg.beta >= 0.0)) fail("beta must be >= 0");
  if (!std::isfinite(c.reg.alpha)) fail("alpha must be finite");
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view v, std::string_view key) {
  T out{};
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ValidationError("expected a number for '" + std::string(key) + "', got '" + std::string(v) + "'");
  }
  return out;
}

bool parse_bool(std::string_view v, std::string_view key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError("expected true|false for '" + std::string(key) + "', got '" + std::string(v) + "'");
}

using Setter = std::function<void(TrainConfig&, std::string_view)>;
using Getter = std::function<std::string(const TrainConfig&)>;

struct Field {
  const char* key;
  Setter set;
  Getter get;
};

template <typename T>
Field size_field(const char* key, T TrainConfig::*member) {
  return {key, [=](TrainConfig& c, std::string_view v) { c.*member = parse_number<T>(v, key); },
          [=](const TrainConfig& c) { return std::to_string(c.*member); }};
}

Field real_field(const char* key, double TrainConfig::*member) {
  return {key, [=](TrainConfig& c, std::string_view v) { c.*member = parse_number<double>(v, key); },
          [=](const TrainConfig& c) { return format_double(c.*member); }};
}

Field reg_field(const char* key, double RegularizerConfig::*member) {
  return {key, [=](TrainConfig& c, std::string_view v) { c.reg.*member = parse_number<double>(v, key); },
          [=](const TrainConfig& c) { return format_double(c.reg.*member); }};
}

Field bool_field(const char* key, bool TrainConfig::*member) {
  return {key, [=](TrainConfig& c, std::string_view v) { c.*member = parse_bool(v, key); },
          [=](const TrainConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = {
      {"mode", [](TrainConfig& c, std::string_view v) { c.mode = parse_mode(v); },
       [](const TrainConfig& c) { return std::string(to_string(c.mode)); }},
      size_field("n_target", &TrainConfig::n_target),
      size_field("n_general", &TrainConfig::n_general),
      size_field("rollouts_per_prompt", &TrainConfig::rollouts_per_prompt),
      real_field("temperature", &TrainConfig::temperature),
      size_field("batch_size", &TrainConfig::batch_size),
      size_field("steps", &TrainConfig::steps),
      real_field("learning_rate", &TrainConfig::learning_rate),
      size_field("seed", &TrainConfig::seed),
      {"regularizer", [](TrainConfig& c, std::string_view v) { c.regularizer = parse_regularizer(v); },
       [](const TrainConfig& c) { return std::string(to_string(c.regularizer)); }},
      reg_field("alpha", &RegularizerConfig::alpha),
      reg_field("gamma", &RegularizerConfig::gamma),
      reg_field("eps_low", &RegularizerConfig::eps_low),
      reg_field("eps_high", &RegularizerConfig::eps_high),
      reg_field("k_frac", &RegularizerConfig::k_frac),
      reg_field("beta", &RegularizerConfig::beta),
      {"sim_choice", [](TrainConfig& c, std::string_view v) { c.sim_choice = parse_similarity(v); },
       [](const TrainConfig& c) { return std::string(to_string(c.sim_choice)); }},
      {"entropy_curve_weighting",
       [](TrainConfig& c, std::string_view v) { c.entropy_curve_weighting = parse_weighting(v); },
       [](const TrainConfig& c) { return std::string(to_string(c.entropy_curve_weighting)); }},
      size_field("max_len", &TrainConfig::max_len),
      size_field("context_window", &TrainConfig::context_window),
      real_field("target_fraction", &TrainConfig::target_fraction),
      size_field("eda_warmup", &TrainConfig::eda_warmup),
      size_field("log_interval", &TrainConfig::log_interval),
      size_field("selection_pool_factor", &TrainConfig::selection_pool_factor),
      size_field("ppo_epochs", &TrainConfig::ppo_epochs),
      bool_field("reference_kl", &TrainConfig::reference_kl),
      bool_field("dump_traces", &TrainConfig::dump_traces),
  };
  return kFields;
}

}  // namespace

TrainConfig parse_config(std::string_view text) {
  std::map<std::string_view, const Field*> by_key;
  for (const auto& f : fields()) by_key[f.key] = &f;

  TrainConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw ValidationError(where + "expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = by_key.find(key);
    if (it == by_key.end()) throw ValidationError(where + "unknown key '" + std::string(key) + "'");
    if (!seen.insert(std::string(key)).second) throw ValidationError(where + "duplicate key '" + std::string(key) + "'");
    try {
      it->second->set(cfg, value);
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
  validate(cfg);
  return cfg;
}

std::string format_config(const TrainConfig& config) {
  std::ostringstream out;
  for (const auto& f : fields()) out << f.key << " = " << f.get(config) << '\n';
  return out.str();
}

TrainConfig load_config(const std::filesystem::path& path) { return parse_config(read_text_file(path)); }

}  // namespace heal
