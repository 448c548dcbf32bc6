// SPDX-License-Identifier: Apache-2.0
#include "heal/trace_io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "heal/error.hpp"

namespace heal {

using json = nlohmann::ordered_json;

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading " + path.string());
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.flush();
  if (!out) throw IoError("error while writing " + path.string());
}

namespace {

[[noreturn]] void field_error(std::size_t line_no, std::string_view field, const std::string& what) {
  throw ValidationError("line " + std::to_string(line_no) + ": field '" + std::string(field) + "': " + what);
}

std::vector<double> real_array(const json& v, std::size_t line_no, std::string_view field) {
  if (!v.is_array()) field_error(line_no, field, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) field_error(line_no, field, "expected an array of numbers");
    const double d = x.get<double>();
    if (!std::isfinite(d)) field_error(line_no, field, "non-finite value");
    out.push_back(d);
  }
  return out;
}

}  // namespace

TraceRecord parse_trace_line(std::string_view line, std::size_t line_no) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ValidationError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
  }
  if (!obj.is_object()) throw ValidationError("line " + std::to_string(line_no) + ": expected a JSON object");

  TraceRecord rec;
  bool have_id = false, have_domain = false, have_index = false, have_entropies = false, have_correct = false;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    if (key == "prompt_id") {
      if (!v.is_string()) field_error(line_no, key, "expected a string");
      rec.prompt_id = v.get<std::string>();
      have_id = true;
    } else if (key == "domain") {
      if (!v.is_string()) field_error(line_no, key, "expected \"target\" or \"general\"");
      const auto s = v.get<std::string>();
      if (s != "target" && s != "general") field_error(line_no, key, "expected \"target\" or \"general\"");
      rec.domain = parse_domain(s);
      have_domain = true;
    } else if (key == "trajectory_index") {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 0) field_error(line_no, key, "expected a non-negative integer");
      rec.trajectory_index = v.get<std::int64_t>();
      have_index = true;
    } else if (key == "tokens") {
      if (!v.is_array()) field_error(line_no, key, "expected an array of integers");
      std::vector<std::int64_t> toks;
      for (const auto& x : v) {
        if (!x.is_number_integer()) field_error(line_no, key, "expected an array of integers");
        toks.push_back(x.get<std::int64_t>());
      }
      rec.tokens = std::move(toks);
    } else if (key == "entropies") {
      rec.entropies = real_array(v, line_no, key);
      if (rec.entropies.empty()) field_error(line_no, key, "must not be empty");
      for (double h : rec.entropies) {
        if (h < 0.0) field_error(line_no, key, "entropies must be >= 0");
      }
      have_entropies = true;
    } else if (key == "logprobs") {
      auto lp = real_array(v, line_no, key);
      for (double x : lp) {
        if (x > 0.0) field_error(line_no, key, "log-probs must be <= 0");
      }
      rec.logprobs = std::move(lp);
    } else if (key == "correct") {
      if (!v.is_number_integer() || (v.get<std::int64_t>() != 0 && v.get<std::int64_t>() != 1)) {
        field_error(line_no, key, "expected 0 or 1");
      }
      rec.correct = static_cast<int>(v.get<std::int64_t>());
      have_correct = true;
    } else if (key == "answer") {
      if (!v.is_string()) field_error(line_no, key, "expected a string");
      rec.answer = v.get<std::string>();
    } else {
      rec.extra[key] = v;
    }
  }
  if (!have_id) field_error(line_no, "prompt_id", "missing");
  if (!have_domain) field_error(line_no, "domain", "missing");
  if (!have_index) field_error(line_no, "trajectory_index", "missing");
  if (!have_entropies) field_error(line_no, "entropies", "missing");
  if (!have_correct) field_error(line_no, "correct", "missing");
  if (rec.logprobs && rec.logprobs->size() != rec.entropies.size()) {
    field_error(line_no, "logprobs",
                "length " + std::to_string(rec.logprobs->size()) + " does not match entropies length " +
                    std::to_string(rec.entropies.size()));
  }
  return rec;
}

std::string format_trace_line(const TraceRecord& rec) {
  json obj = json::object();
  obj["prompt_id"] = rec.prompt_id;
  obj["domain"] = std::string(to_string(rec.domain));
  obj["trajectory_index"] = rec.trajectory_index;
  if (rec.tokens) obj["tokens"] = *rec.tokens;
  obj["entropies"] = rec.entropies;
  if (rec.logprobs) obj["logprobs"] = *rec.logprobs;
  obj["correct"] = rec.correct;
  if (rec.answer) obj["answer"] = *rec.answer;
  for (auto it = rec.extra.begin(); it != rec.extra.end(); ++it) obj[it.key()] = it.value();
  return obj.dump();
}

std::vector<TraceRecord> load_traces(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::vector<TraceRecord> out;
  std::map<std::string, Domain> domains;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    const auto nl = text.find('\n', pos);
    const std::string_view line(text.data() + pos, (nl == std::string::npos ? text.size() : nl) - pos);
    pos = nl == std::string::npos ? text.size() : nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    auto rec = parse_trace_line(line, line_no);
    const auto [it, inserted] = domains.emplace(rec.prompt_id, rec.domain);
    if (!inserted && it->second != rec.domain) {
      field_error(line_no, "domain", "prompt '" + rec.prompt_id + "' already appeared as " +
                                         std::string(to_string(it->second)));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void write_traces(std::span<const TraceRecord> records, const std::filesystem::path& path) {
  std::string text;
  for (const auto& r : records) {
    text += format_trace_line(r);
    text += '\n';
  }
  write_text_file(path, text);
}

Trajectory to_trajectory(const TraceRecord& rec) {
  Trajectory t;
  t.prompt_id = rec.prompt_id;
  t.domain = rec.domain;
  t.index = static_cast<int>(rec.trajectory_index);
  if (rec.tokens) {
    for (auto tok : *rec.tokens) t.tokens.push_back(static_cast<int>(tok));
  }
  t.step_entropies = rec.entropies;
  if (rec.logprobs) t.step_logprobs = *rec.logprobs;
  t.correct = rec.correct == 1;
  return t;
}

TraceRecord to_trace_record(const Trajectory& traj) {
  TraceRecord r;
  r.prompt_id = traj.prompt_id;
  r.domain = traj.domain;
  r.trajectory_index = traj.index;
  if (!traj.tokens.empty()) r.tokens = std::vector<std::int64_t>(traj.tokens.begin(), traj.tokens.end());
  r.entropies = traj.step_entropies;
  if (!traj.step_logprobs.empty()) r.logprobs = traj.step_logprobs;
  r.correct = traj.correct.value_or(false) ? 1 : 0;
  return r;
}

std::vector<RolloutGroup> group_traces(std::span<const TraceRecord> records) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<Trajectory>> by_prompt;
  std::map<std::string, std::string> answers;
  for (const auto& r : records) {
    auto& bucket = by_prompt[r.prompt_id];
    if (bucket.empty()) order.push_back(r.prompt_id);
    bucket.push_back(to_trajectory(r));
    if (r.answer && !answers.count(r.prompt_id)) answers[r.prompt_id] = *r.answer;
  }
  std::vector<RolloutGroup> groups;
  groups.reserve(order.size());
  for (const auto& id : order) {
    auto& trajs = by_prompt[id];
    const Domain d = trajs.front().domain;
    groups.emplace_back(id, d, std::move(trajs), answers.count(id) ? answers[id] : std::string{});
  }
  return groups;
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& obj, const char* key, std::size_t line_no) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  if (!obj[key].is_number()) field_error(line_no, key, "expected a number or null");
  return obj[key].get<double>();
}

}  // namespace

std::string format_metrics_row(const MetricsRow& row) {
  json obj = json::object();
  obj["step"] = row.step;
  obj["mean_entropy_target"] = optional_number(row.mean_entropy_target);
  obj["mean_entropy_general"] = optional_number(row.mean_entropy_general);
  obj["reward_rate"] = row.reward_rate;
  obj["eda_rate"] = row.eda_rate;
  obj["mean_ed_distance"] = optional_number(row.mean_ed_distance);
  return obj.dump();
}

MetricsRow parse_metrics_row(std::string_view line, std::size_t line_no) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ValidationError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
  }
  if (!obj.is_object()) throw ValidationError("line " + std::to_string(line_no) + ": expected a JSON object");
  MetricsRow row;
  if (!obj.contains("step") || !obj["step"].is_number_unsigned()) field_error(line_no, "step", "expected a non-negative integer");
  row.step = obj["step"].get<std::size_t>();
  row.mean_entropy_target = read_optional(obj, "mean_entropy_target", line_no);
  row.mean_entropy_general = read_optional(obj, "mean_entropy_general", line_no);
  for (const char* key : {"reward_rate", "eda_rate"}) {
    if (!obj.contains(key) || !obj[key].is_number()) field_error(line_no, key, "expected a number");
  }
  row.reward_rate = obj["reward_rate"].get<double>();
  row.eda_rate = obj["eda_rate"].get<double>();
  row.mean_ed_distance = read_optional(obj, "mean_ed_distance", line_no);
  return row;
}

void write_metrics(std::span<const MetricsRow> rows, const std::filesystem::path& path) {
  std::string text;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].step <= rows[i - 1].step) {
      throw ValidationError("write_metrics: step " + std::to_string(rows[i].step) + " does not increase");
    }
    text += format_metrics_row(rows[i]);
    text += '\n';
  }
  write_text_file(path, text);
}

std::vector<MetricsRow> read_metrics(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::vector<MetricsRow> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.push_back(parse_metrics_row(line, line_no));
    if (rows.size() > 1 && rows.back().step <= rows[rows.size() - 2].step) {
      field_error(line_no, "step", "steps must be strictly increasing");
    }
  }
  return rows;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_heatmap(std::span<const EntropyDynamics> dynamics) {
  const auto m = pairwise_distance_matrix(dynamics);
  std::string out = "id";
  for (const auto& d : dynamics) out += "," + csv_field(d.source_id());
  out += '\n';
  char buf[40];
  for (std::size_t i = 0; i < m.n; ++i) {
    out += csv_field(dynamics[i].source_id());
    for (std::size_t j = 0; j < m.n; ++j) {
      std::snprintf(buf, sizeof(buf), ",%.9g", m(i, j));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void export_heatmap(std::span<const EntropyDynamics> dynamics, const std::filesystem::path& path) {
  write_text_file(path, format_heatmap(dynamics));
}

namespace {

constexpr char kPolicyMagic[8] = {'H', 'E', 'A', 'L', 'P', 'O', 'L', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xffu);
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xffu);
}

std::uint64_t get_le(const std::string& in, std::size_t off, int bytes) {
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(in[off + static_cast<std::size_t>(i)]);
  return v;
}

}  // namespace

void write_policy(const ToyPolicy& policy, const std::filesystem::path& path) {
  std::string out(kPolicyMagic, sizeof(kPolicyMagic));
  put_u32(out, static_cast<std::uint32_t>(policy.vocab_size()));
  put_u32(out, static_cast<std::uint32_t>(policy.context_window()));
  for (double x : policy.params()) put_u64(out, std::bit_cast<std::uint64_t>(x));
  write_text_file(path, out);
}

ToyPolicy read_policy(const std::filesystem::path& path) {
  const std::string in = read_text_file(path);
  if (in.size() < 16 || std::memcmp(in.data(), kPolicyMagic, sizeof(kPolicyMagic)) != 0) {
    throw ValidationError(path.string() + ": not a HEALPOL1 policy file");
  }
  const auto vocab = static_cast<int>(get_le(in, 8, 4));
  const auto window = static_cast<int>(get_le(in, 12, 4));
  ToyPolicy policy(vocab, window);
  if (in.size() != 16 + 8 * policy.num_params()) {
    throw ValidationError(path.string() + ": payload size does not match the header");
  }
  auto params = policy.params();
  for (std::size_t i = 0; i < params.size(); ++i) params[i] = std::bit_cast<double>(get_le(in, 16 + 8 * i, 8));
  return policy;
}

}  // namespace heal
