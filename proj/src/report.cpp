#include <charconv>

#include <json.hpp>

#include "edgehml/trainer.hpp"

namespace edgehml {

namespace {

nlohmann::json config_json(const Hyperparams& h) {
  return {{"tau", h.tau},
          {"alpha", h.alpha},
          {"beta", h.beta},
          {"eta", h.eta},
          {"xi", h.xi},
          {"v1_frac", h.v1_frac},
          {"v2_frac", h.v2_frac},
          {"p_admit", h.p_admit},
          {"lr", h.lr},
          {"mem_capacity", h.mem_capacity},
          {"disk_capacity", h.disk_capacity},
          {"iters_per_task", h.iters_per_task},
          {"batch_new", h.batch_new},
          {"batch_replay", h.batch_replay},
          {"batch_unlabeled", h.batch_unlabeled},
          {"hidden_units", h.hidden_units},
          {"seed", h.seed},
          {"relabel_replay", h.relabel_replay},
          {"class_incremental_eval", h.class_incremental_eval}};
}

nlohmann::json task_json(const TaskMetrics& m) {
  nlohmann::json j = {{"task_id", m.task_id},
                      {"iterations", m.iterations},
                      {"unsup_iterations", m.unsup_iterations},
                      {"unsup_forward_count", m.unsup_forward_count},
                      {"confident_count", m.confident_count},
                      {"admission_forwards", m.admission_forwards},
                      {"offered", m.offered},
                      {"admitted", m.admitted},
                      {"rejected_low_confidence", m.rejected_low_confidence},
                      {"rejected_out_of_task", m.rejected_out_of_task},
                      {"rejected_by_coin", m.rejected_by_coin},
                      {"labeled_offered", m.labeled_offered},
                      {"labeled_stored", m.labeled_stored},
                      {"final_loss", m.final_loss},
                      {"train_s", m.train_s}};
  j["first_unsup_iteration"] = m.first_unsup_iteration ? nlohmann::json(*m.first_unsup_iteration) : nlohmann::json();
  return j;
}

}  // namespace

std::string report_json(const RunReport& r, std::uint64_t seed) {
  nlohmann::json j;
  j["variant"] = std::string(to_string(r.variant));
  j["seed"] = seed;
  j["acc_matrix"] = r.acc_matrix;
  j["average_accuracy"] = r.average_accuracy;
  j["unsup_fraction"] = r.unsup_fraction;
  j["unsup_iterations"] = r.unsup_iterations;
  j["total_iterations"] = r.total_iterations;
  j["unsup_forward_count"] = r.unsup_forward_count;
  j["iteration_time_s"] = r.iteration_time_s;
  j["per_task_offline_s"] = r.per_task_offline_s;
  j["disk_eviction_policy"] = "fifo-ring";
  j["disk_count"] = r.disk_count;
  j["disk_class_num"] = r.disk_class_num;
  auto& tasks = j["tasks"] = nlohmann::json::array();
  for (const auto& m : r.tasks) tasks.push_back(task_json(m));
  auto& off = j["offline"] = nlohmann::json::array();
  for (std::size_t k = 0; k < r.offline.size(); ++k) {
    const auto& o = r.offline[k];
    off.push_back({{"after_task", k},
                   {"class_prob", o.class_prob},
                   {"class_loss", o.class_loss},
                   {"requested", o.requested},
                   {"drawn", o.drawn},
                   {"duration_s", o.duration_s}});
  }
  j["config"] = config_json(r.config_echo);
  return j.dump(2);
}

namespace {

// Shortest text that parses back to the same double.
std::string shortest(double v) {
  char buf[32];
  return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
}

}  // namespace

std::string csv_row(const RunReport& r, std::uint64_t seed) {
  std::string row(to_string(r.variant));
  row += ',' + std::to_string(seed) + ',' + shortest(r.average_accuracy) + ',' + shortest(r.unsup_fraction) + ',' +
         shortest(r.iteration_time_s);
  return row;
}

}  // namespace edgehml
