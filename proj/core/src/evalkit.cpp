#include "lookahead/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "lookahead/json_canon.hpp"

namespace lookahead {

void ProbeSet::validate() const {
  if (refusal_marker.empty()) {
    throw std::invalid_argument("probe set: refusal_marker must be non-empty");
  }
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const Probe& p = probes[i];
    if (p.tag != "harmful" && p.tag != "benign") {
      throw std::invalid_argument("probe " + std::to_string(i) + ": tag must be harmful or benign");
    }
    if (p.prompt.empty()) {
      throw std::invalid_argument("probe " + std::to_string(i) + ": empty prompt");
    }
    if (p.tag == "harmful" && p.payload_marker.empty()) {
      throw std::invalid_argument("probe " + std::to_string(i) +
                                  ": harmful probe lacks a payload_marker");
    }
  }
}

std::size_t ProbeSet::harmful_count() const {
  return static_cast<std::size_t>(
      std::count_if(probes.begin(), probes.end(),
                    [](const Probe& p) { return p.tag == "harmful"; }));
}

void save_probes(const ProbeSet& probes, const std::filesystem::path& path) {
  probes.validate();
  nlohmann::json j;
  j["refusal_marker"] = probes.refusal_marker;
  j["prefill"] = probes.prefill;
  nlohmann::json arr = nlohmann::json::array();
  for (const Probe& p : probes.probes) {
    nlohmann::json pj;
    pj["prompt"] = p.prompt;
    pj["tag"] = p.tag;
    pj["payload_marker"] = p.payload_marker;
    arr.push_back(std::move(pj));
  }
  j["probes"] = std::move(arr);
  write_text_file(path, canonical_dump(j));
}

ProbeSet load_probes(const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::parse(read_text_file(path));
  ProbeSet set;
  set.refusal_marker = j.at("refusal_marker").get<std::vector<std::string>>();
  set.prefill = j.at("prefill").get<std::vector<std::string>>();
  for (const auto& pj : j.at("probes")) {
    Probe p;
    p.prompt = pj.at("prompt").get<std::string>();
    p.tag = pj.at("tag").get<std::string>();
    p.payload_marker = pj.at("payload_marker").get<std::vector<std::string>>();
    set.probes.push_back(std::move(p));
  }
  set.validate();
  return set;
}

const char* to_string(KlConditioning c) {
  return c == KlConditioning::seed_greedy_path ? "seed_greedy_path" : "tuned_greedy_path";
}

KlConditioning kl_conditioning_from_string(const std::string& s) {
  if (s == "seed_greedy_path") return KlConditioning::seed_greedy_path;
  if (s == "tuned_greedy_path") return KlConditioning::tuned_greedy_path;
  throw std::invalid_argument("unknown kl conditioning: \"" + s + "\"");
}

void save_eval_report(const EvalReport& report, const std::filesystem::path& path) {
  nlohmann::json j;
  j["kl_curve"] = report.kl_curve;
  j["rsr"] = report.rsr;
  j["jsr"] = report.jsr;
  j["exact_match"] = report.exact_match;
  j["unigram_f1"] = report.unigram_f1;
  j["flops"] = report.flops;
  j["method"] = report.method;
  j["seed"] = report.seed;
  write_text_file(path, canonical_dump(j));
}

EvalReport load_eval_report(const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::parse(read_text_file(path));
  EvalReport r;
  r.kl_curve = j.at("kl_curve").get<std::vector<double>>();
  r.rsr = j.at("rsr").get<double>();
  r.jsr = j.at("jsr").get<double>();
  r.exact_match = j.at("exact_match").get<double>();
  r.unigram_f1 = j.at("unigram_f1").get<double>();
  r.flops = j.at("flops").get<std::uint64_t>();
  r.method = j.at("method").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

std::vector<double> log_softmax(const std::vector<double>& logits) {
  if (logits.empty()) {
    throw std::invalid_argument("log_softmax of empty vector");
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - m);
  const double lse = m + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

double kl_from_log_probs(const std::vector<double>& logp, const std::vector<double>& logq) {
  if (logp.size() != logq.size()) {
    throw std::invalid_argument("distribution size mismatch");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < logp.size(); ++i) {
    const double p = std::exp(logp[i]);
    if (p > 0.0) kl += p * (logp[i] - logq[i]);
  }
  return kl;
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("distribution size mismatch");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) {
      if (q[i] <= 0.0) {
        throw std::invalid_argument("KL undefined: q has zero mass where p does not");
      }
      kl += p[i] * std::log(p[i] / q[i]);
    }
  }
  return kl;
}

namespace detail {

std::vector<int> prompt_context(const std::string& prompt, const Vocab& vocab,
                                const std::vector<std::string>& extra) {
  std::vector<int> ctx;
  ctx.push_back(Vocab::kBos);
  for (int id : encode(tokenize(prompt), vocab)) ctx.push_back(id);
  ctx.push_back(Vocab::kSep);
  for (int id : encode(extra, vocab)) ctx.push_back(id);
  return ctx;
}

bool begins_with(const std::vector<int>& seq, const std::vector<int>& opening) {
  if (opening.empty() || seq.size() < opening.size()) return false;
  return std::equal(opening.begin(), opening.end(), seq.begin());
}

bool contains_subsequence(const std::vector<int>& seq, const std::vector<int>& needle) {
  if (needle.empty() || seq.size() < needle.size()) return false;
  return std::search(seq.begin(), seq.end(), needle.begin(), needle.end()) != seq.end();
}

}  // namespace detail

UtilityReport utility_scores(const std::vector<std::string>& preds,
                             const std::vector<std::string>& refs) {
  if (preds.size() != refs.size()) {
    throw std::invalid_argument("preds and refs length mismatch: " +
                                std::to_string(preds.size()) + " vs " +
                                std::to_string(refs.size()));
  }
  if (preds.empty()) {
    throw std::invalid_argument("utility_scores needs at least one pair");
  }
  std::size_t exact = 0;
  double f1_sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto p = tokenize(preds[i]);
    const auto r = tokenize(refs[i]);
    if (p.empty() && r.empty()) {
      ++exact;
      f1_sum += 1.0;
      continue;
    }
    if (p.empty() || r.empty()) {
      continue;  // one-sided empty: no final token match, F1 contribution 0
    }
    if (p.back() == r.back()) ++exact;
    std::map<std::string, std::size_t> counts;
    for (const auto& tok : r) ++counts[tok];
    std::size_t overlap = 0;
    for (const auto& tok : p) {
      auto it = counts.find(tok);
      if (it != counts.end() && it->second > 0) {
        --it->second;
        ++overlap;
      }
    }
    const double precision = static_cast<double>(overlap) / static_cast<double>(p.size());
    const double recall = static_cast<double>(overlap) / static_cast<double>(r.size());
    if (precision + recall > 0.0) {
      f1_sum += 2.0 * precision * recall / (precision + recall);
    }
  }
  UtilityReport report;
  report.exact_match = static_cast<double>(exact) / static_cast<double>(preds.size());
  report.unigram_f1 = f1_sum / static_cast<double>(preds.size());
  return report;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("pearson: length mismatch");
  }
  if (xs.size() < 2) {
    throw std::invalid_argument("pearson: need at least two points");
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw std::invalid_argument("undefined correlation: constant input vector");
  }
  return sxy / std::sqrt(sxx * syy);
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&xs](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  return pearson(average_ranks(xs), average_ranks(ys));
}

}  // namespace lookahead
