// SPDX-License-Identifier: Apache-2.0
#include "heal/analysis.hpp"

#include <cstdio>

#include "heal/error.hpp"

namespace heal {

__extension__ using Uint128 = unsigned __int128;

std::uint64_t binomial(std::uint64_t a, std::uint64_t b) {
  if (b > a) return 0;
  if (b > a - b) b = a - b;
  Uint128 acc = 1;
  for (std::uint64_t i = 1; i <= b; ++i) {
    // acc * (a - b + i) / i stays an integer at every step
    acc = acc * (a - b + i) / i;
    if (acc > UINT64_MAX) throw DomainError("binomial: C(" + std::to_string(a) + ", " + std::to_string(b) + ") overflows");
  }
  return static_cast<std::uint64_t>(acc);
}

double pass_at_k(const PassAtKInput& in) {
  if (in.n < 1 || in.c > in.n || in.k < 1 || in.k > in.n) {
    throw DomainError("pass_at_k: require n >= 1, 0 <= c <= n, 1 <= k <= n");
  }
  if (in.c == 0) return 0.0;
  if (in.n <= 64) {
    const std::uint64_t total = binomial(in.n, in.k);
    const std::uint64_t miss = binomial(in.n - in.c, in.k);
    return static_cast<double>(total - miss) / static_cast<double>(total);
  }
  if (in.n - in.c < in.k) return 1.0;
  // C(n-c, k) / C(n, k) = prod_{i=n-c+1}^{n} (1 - k / i)
  double miss = 1.0;
  for (std::uint64_t i = in.n - in.c + 1; i <= in.n; ++i) miss *= 1.0 - static_cast<double>(in.k) / static_cast<double>(i);
  return 1.0 - miss;
}

LabelledRun load_run_curves(const std::filesystem::path& run_dir, std::string label) {
  const auto path = run_dir / "metrics.jsonl";
  if (!std::filesystem::exists(path)) throw IoError("no metrics.jsonl in " + run_dir.string());
  return {label.empty() ? run_dir.filename().string() : std::move(label), read_metrics(path)};
}

namespace {

std::string cell(const std::optional<double>& v) {
  if (!v) return {};
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", *v);
  return buf;
}

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

std::string format_curves(std::span<const LabelledRun> runs, bool with_label) {
  std::string out = with_label ? "run," : "";
  out += "step,mean_entropy_target,mean_entropy_general,reward_rate,eda_rate\n";
  for (const auto& run : runs) {
    for (const auto& r : run.rows) {
      if (with_label) out += csv_field(run.label) + ",";
      out += std::to_string(r.step) + "," + cell(r.mean_entropy_target) + "," + cell(r.mean_entropy_general) + "," +
             cell(r.reward_rate) + "," + cell(r.eda_rate) + "\n";
    }
  }
  return out;
}

}  // namespace heal
