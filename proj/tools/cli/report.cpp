#include "report.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "bleubound/errors.hpp"

namespace bleubound::cli {
namespace {

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

// NaN and infinities have no JSON spelling; they become null.
Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, Json>>& out) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      flatten(value, prefix.empty() ? key : prefix + "." + key, out);
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      flatten(j[i], prefix + "_" + std::to_string(i + 1), out);
    }
  } else {
    out.emplace_back(prefix, j);
  }
}

std::string cell(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) {
    std::ostringstream s;
    s.precision(std::numeric_limits<double>::max_digits10);
    s << v.get<double>();
    return s.str();
  }
  return v.dump();
}

template <typename T>
void read_field(const Json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

Json to_json(const BleuBreakdown& b) {
  return Json{{"score", b.score},
              {"bp", b.bp},
              {"precisions", b.precisions},
              {"overlaps", b.overlaps},
              {"cand_len", b.cand_len},
              {"ref_len", b.ref_len}};
}

Json to_json(const LbResult& r) {
  return Json{{"lb_overlaps", r.lb_overlaps},
              {"lb_precisions", r.lb_precisions},
              {"smoothed", r.smoothed},
              {"aggregate", r.aggregate},
              {"bound_value", r.bound_value}};
}

Json to_json(const McEstimate& e) {
  return Json{{"mean", e.mean}, {"std_error", e.std_error}, {"samples", e.samples}, {"seed", e.seed}};
}

Json to_json(const ExactExpectation& e) {
  return Json{{"value", e.value}, {"outcomes", e.outcomes}};
}

Json to_json(const FdReport& r) {
  return Json{{"max_rel_error", r.max_rel_error},
              {"max_abs_error", r.max_abs_error},
              {"step", r.step},
              {"entries_checked", r.entries_checked},
              {"max_row_sum", r.max_row_sum}};
}

Json to_json(const GradSuiteReport& r) {
  Json j = to_json(r.worst);
  j["instances"] = r.instances;
  j["redrawn"] = r.redrawn;
  return j;
}

Json to_json(const ToySummary& s) {
  return Json{{"initial_lb", s.initial_lb},
              {"final_lb", s.final_lb},
              {"initial_argmax_bleu", s.initial_argmax_bleu},
              {"final_argmax_bleu", s.final_argmax_bleu},
              {"initial_mc", s.initial_mc},
              {"final_mc", s.final_mc},
              {"correlation", number(s.correlation)},
              {"bound_violations", s.bound_violations}};
}

Json to_json(const ToyConfig& cfg) {
  return Json{{"len", cfg.len},
              {"vocab_size", cfg.vocab_size},
              {"max_order", cfg.bleu.max_order},
              {"weights", effective_weights(cfg.bleu, cfg.len)},
              {"use_bp", cfg.bleu.use_bp},
              {"learning_rate", cfg.learning_rate},
              {"optimizer", std::string(to_string(cfg.optimizer))},
              {"adam", {{"beta1", cfg.adam.beta1}, {"beta2", cfg.adam.beta2}, {"epsilon", cfg.adam.epsilon}}},
              {"steps", cfg.steps},
              {"eval_every", cfg.eval_every},
              {"mc_samples", cfg.mc_samples},
              {"seed", cfg.seed},
              {"smoothing", cfg.smoothing},
              {"allow_duplicate_refs", cfg.allow_duplicate_refs}};
}

Json to_json(const GradientComparison& c) {
  Json reinforce = Json::array();
  for (const auto& r : c.reinforce) {
    reinforce.push_back(Json{{"samples", r.samples},
                             {"mean_entry_variance", r.mean_entry_variance},
                             {"cosine_to_exact", r.cosine_to_exact},
                             {"grad", matrix_json(r.grad)}});
  }
  return Json{{"exact_grad", matrix_json(c.exact_grad)},
              {"lb",
               {{"grad", matrix_json(c.lb_grad)},
                {"deterministic", c.lb_deterministic},
                // Repeated evaluations agree bitwise, so the spread is exactly 0.
                {"mean_entry_variance", c.lb_deterministic ? Json(0.0) : Json(nullptr)},
                {"cosine_to_exact", c.lb_cosine_to_exact}}},
              {"reinforce", reinforce}};
}

void apply_toy_json(const Json& j, ToyConfig& cfg) {
  if (!j.is_object()) throw InvalidConfig("toy config must be a JSON object");
  static const char* const known[] = {"len",        "vocab_size", "max_order", "weights",
                                      "use_bp",     "learning_rate", "optimizer", "adam",
                                      "steps",      "eval_every", "mc_samples", "seed",
                                      "smoothing",  "allow_duplicate_refs", "threads"};
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw InvalidConfig("unknown toy config key '" + key + "'");
  }
  try {
    read_field(j, "len", cfg.len);
    read_field(j, "vocab_size", cfg.vocab_size);
    read_field(j, "max_order", cfg.bleu.max_order);
    read_field(j, "weights", cfg.bleu.weights);
    read_field(j, "use_bp", cfg.bleu.use_bp);
    read_field(j, "learning_rate", cfg.learning_rate);
    if (j.contains("optimizer")) cfg.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    if (j.contains("adam")) {
      const Json& a = j.at("adam");
      read_field(a, "beta1", cfg.adam.beta1);
      read_field(a, "beta2", cfg.adam.beta2);
      read_field(a, "epsilon", cfg.adam.epsilon);
    }
    read_field(j, "steps", cfg.steps);
    read_field(j, "eval_every", cfg.eval_every);
    read_field(j, "mc_samples", cfg.mc_samples);
    read_field(j, "seed", cfg.seed);
    read_field(j, "smoothing", cfg.smoothing);
    read_field(j, "allow_duplicate_refs", cfg.allow_duplicate_refs);
    read_field(j, "threads", cfg.threads);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("toy config: ") + e.what());
  }
}

std::string csv_header(const Json& j) {
  std::vector<std::pair<std::string, Json>> flat;
  flatten(j, "", flat);
  std::string out;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (i) out += ',';
    out += flat[i].first;
  }
  return out;
}

std::string csv_row(const Json& j) {
  std::vector<std::pair<std::string, Json>> flat;
  flatten(j, "", flat);
  std::string out;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (i) out += ',';
    out += cell(flat[i].second);
  }
  return out;
}

}  // namespace bleubound::cli
