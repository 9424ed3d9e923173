#include "ordino/ordino.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "ordino/config.hpp"
#include "ordino/error.hpp"
#include "ordino/harness.hpp"
#include "ordino/metrics.hpp"

struct ordino_config {
  ordino::RunConfig cfg;
};

struct ordino_checkpoint {
  ordino::Checkpoint ckpt;
};

struct ordino_report {
  ordino::Report report;
};

struct ordino_matrix {
  ordino::SimilarityMatrix m;
};

namespace {

thread_local std::string g_last_error;

int set_error(int status, const std::string& msg) {
  g_last_error = msg;
  return status;
}

// Runs fn, translating exceptions into status codes and the thread's last
// error message.
template <class Fn>
int guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return ORDINO_OK;
  } catch (const ordino::Error& e) {
    return set_error(static_cast<int>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(ORDINO_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(ORDINO_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(ORDINO_ERR_INTERNAL, "unknown error");
  }
}

void need(const void* p, const char* what) {
  ordino::require(p != nullptr, ordino::ErrorCode::kInvalidArgument, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  ordino::require(static_cast<bool>(os), ordino::ErrorCode::kIo, "cannot write " + path);
  os << text;
  ordino::require(static_cast<bool>(os), ordino::ErrorCode::kIo, "failed writing " + path);
}

}  // namespace

extern "C" {

const char* ordino_version(void) { return "1.0.0"; }

const char* ordino_last_error(void) { return g_last_error.c_str(); }

const char* ordino_status_name(int status) {
  switch (status) {
    case ORDINO_OK:
      return "ok";
    case ORDINO_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case ORDINO_ERR_SHAPE_MISMATCH:
      return "shape mismatch";
    case ORDINO_ERR_OUT_OF_RANGE:
      return "out of range";
    case ORDINO_ERR_NON_FINITE:
      return "non-finite value";
    case ORDINO_ERR_ZERO_FEATURE:
      return "zero feature";
    case ORDINO_ERR_IO:
      return "i/o error";
    case ORDINO_ERR_PARSE:
      return "parse error";
    case ORDINO_ERR_CONFIG:
      return "config error";
    case ORDINO_ERR_DIVERGENCE:
      return "divergence";
    case ORDINO_ERR_INTERNAL:
      return "internal error";
    default:
      return "unknown status";
  }
}

void ordino_string_free(char* s) { std::free(s); }

int ordino_config_default(ordino_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new ordino_config{};
  });
}

int ordino_config_load(const char* path, ordino_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new ordino_config{ordino::load_config(path)};
  });
}

int ordino_config_parse(const char* json, ordino_config** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    *out = new ordino_config{ordino::parse_config(json)};
  });
}

int ordino_config_set_seed(ordino_config* cfg, uint64_t seed) {
  return guarded([&] {
    need(cfg, "cfg");
    cfg->cfg.seed = seed;
  });
}

int ordino_config_set_preset(ordino_config* cfg, const char* preset) {
  return guarded([&] {
    need(cfg, "cfg");
    need(preset, "preset");
    ordino::apply_preset(cfg->cfg, preset);
  });
}

int ordino_config_to_json(const ordino_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = dup_string(ordino::to_json(cfg->cfg));
  });
}

int ordino_config_hash(const ordino_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = dup_string(ordino::config_hash(cfg->cfg));
  });
}

void ordino_config_free(ordino_config* cfg) { delete cfg; }

int ordino_generate_data(const ordino_config* cfg, const char* out_dir) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out_dir, "out_dir");
    const ordino::ExperimentData data = ordino::load_experiment_data(cfg->cfg);
    const std::filesystem::path root(out_dir);
    ordino::write_dataset(data.train, root / "train");
    ordino::write_dataset(data.test, root / "test");
  });
}

int ordino_train(const ordino_config* cfg, const char* out_dir, int stage, const ordino_checkpoint* init,
                 ordino_report** out_report) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out_dir, "out_dir");
    const std::filesystem::path dir(out_dir);
    ordino::Report report;
    if (stage == ORDINO_STAGE_BOTH) {
      const ordino::ExperimentData data = ordino::load_experiment_data(cfg->cfg);
      report = ordino::run_experiment(cfg->cfg, data, dir).report;
    } else if (stage == ORDINO_STAGE_1 || stage == ORDINO_STAGE_2) {
      std::unique_ptr<ordino::Model> model;
      if (stage == ORDINO_STAGE_2) {
        ordino::require(init != nullptr, ordino::ErrorCode::kInvalidArgument,
                        "stage 2 needs a stage-1 checkpoint to continue from");
        ordino::require(init->ckpt.stage == 1, ordino::ErrorCode::kInvalidArgument,
                        "stage 2 must continue from a stage-1 checkpoint");
        model = ordino::restore(init->ckpt);
      }
      const ordino::RunConfig& run_cfg = model ? model->config() : cfg->cfg;
      const ordino::ExperimentData data = ordino::load_experiment_data(run_cfg);
      if (!model) model = std::make_unique<ordino::Model>(run_cfg, data.train.label_values);
      std::filesystem::create_directories(dir);
      std::ofstream log(dir / ("train_log_stage" + std::to_string(stage) + ".jsonl"), std::ios::trunc);
      ordino::require(static_cast<bool>(log), ordino::ErrorCode::kIo, "cannot write training log in " + dir.string());
      const auto observer = [&](const ordino::StepRecord& r) { log << ordino::to_json_line(r) << "\n"; };
      const ordino::TrainResult res = stage == ORDINO_STAGE_1 ? ordino::train_stage1(*model, data.train, observer)
                                                              : ordino::train_stage2(*model, data.train, observer);
      ordino::save_checkpoint(res.checkpoint, dir / ("stage" + std::to_string(stage) + ".ckpt"));
      report = ordino::evaluate(*model, data.test);
      write_file((dir / "report.json").string(), report.to_json(2) + "\n");
      ordino::save_similarity_csv(report.similarity, (dir / "similarity.csv").string());
    } else {
      ordino::fail(ordino::ErrorCode::kInvalidArgument, "stage must be 0 (both), 1 or 2");
    }
    if (out_report != nullptr) *out_report = new ordino_report{std::move(report)};
  });
}

int ordino_checkpoint_load(const char* path, ordino_checkpoint** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new ordino_checkpoint{ordino::load_checkpoint(path)};
  });
}

int ordino_checkpoint_save(const ordino_checkpoint* ckpt, const char* path) {
  return guarded([&] {
    need(ckpt, "ckpt");
    need(path, "path");
    ordino::save_checkpoint(ckpt->ckpt, path);
  });
}

int ordino_checkpoint_stage(const ordino_checkpoint* ckpt, int* out) {
  return guarded([&] {
    need(ckpt, "ckpt");
    need(out, "out");
    *out = ckpt->ckpt.stage;
  });
}

int ordino_checkpoint_config(const ordino_checkpoint* ckpt, ordino_config** out) {
  return guarded([&] {
    need(ckpt, "ckpt");
    need(out, "out");
    *out = new ordino_config{ckpt->ckpt.config};
  });
}

void ordino_checkpoint_free(ordino_checkpoint* ckpt) { delete ckpt; }

int ordino_evaluate(const ordino_checkpoint* ckpt, const ordino_config* data_cfg, ordino_report** out) {
  return guarded([&] {
    need(ckpt, "ckpt");
    need(out, "out");
    const auto model = ordino::restore(ckpt->ckpt);
    const ordino::ExperimentData data = ordino::load_experiment_data(data_cfg ? data_cfg->cfg : ckpt->ckpt.config);
    *out = new ordino_report{ordino::evaluate(*model, data.test)};
  });
}

int ordino_report_json(const ordino_report* rep, char** out) {
  return guarded([&] {
    need(rep, "rep");
    need(out, "out");
    *out = dup_string(rep->report.to_json(-1));
  });
}

int ordino_report_metric(const ordino_report* rep, const char* name, double* out) {
  return guarded([&] {
    need(rep, "rep");
    need(name, "name");
    need(out, "out");
    const std::string n(name);
    const ordino::Report& r = rep->report;
    if (n == "mae") {
      *out = r.mae;
    } else if (n == "accuracy") {
      *out = r.accuracy;
    } else if (n == "os") {
      *out = r.os;
    } else if (n.rfind("los:", 0) == 0) {
      const std::string k = n.substr(4);
      for (const auto& [window, value] : r.los)
        if (std::to_string(window) == k) {
          *out = value;
          return;
        }
      ordino::fail(ordino::ErrorCode::kOutOfRange, "report has no LOS for window " + k);
    } else {
      ordino::fail(ordino::ErrorCode::kInvalidArgument, "unknown metric '" + n + "'");
    }
  });
}

int ordino_report_write(const ordino_report* rep, const char* json_path, const char* csv_path) {
  return guarded([&] {
    need(rep, "rep");
    if (json_path != nullptr) write_file(json_path, rep->report.to_json(2) + "\n");
    if (csv_path != nullptr) ordino::save_similarity_csv(rep->report.similarity, csv_path);
  });
}

int ordino_report_similarity(const ordino_report* rep, ordino_matrix** out) {
  return guarded([&] {
    need(rep, "rep");
    need(out, "out");
    *out = new ordino_matrix{rep->report.similarity};
  });
}

void ordino_report_free(ordino_report* rep) { delete rep; }

int ordino_matrix_create(size_t size, const double* values, ordino_matrix** out) {
  return guarded([&] {
    need(values, "values");
    need(out, "out");
    ordino::require(size >= 1, ordino::ErrorCode::kInvalidArgument, "matrix size must be positive");
    ordino::SimilarityMatrix m;
    m.size = size;
    m.s.assign(values, values + size * size);
    *out = new ordino_matrix{std::move(m)};
  });
}

int ordino_matrix_load_csv(const char* path, ordino_matrix** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new ordino_matrix{ordino::load_similarity_csv(path)};
  });
}

int ordino_matrix_from_checkpoint(const ordino_checkpoint* ckpt, ordino_matrix** out) {
  return guarded([&] {
    need(ckpt, "ckpt");
    need(out, "out");
    *out = new ordino_matrix{ordino::similarity_matrix(ckpt->ckpt.rank_features)};
  });
}

int ordino_matrix_size(const ordino_matrix* m, size_t* out) {
  return guarded([&] {
    need(m, "m");
    need(out, "out");
    *out = m->m.size;
  });
}

int ordino_matrix_get(const ordino_matrix* m, size_t i, size_t j, double* out) {
  return guarded([&] {
    need(m, "m");
    need(out, "out");
    ordino::require(i < m->m.size && j < m->m.size, ordino::ErrorCode::kOutOfRange, "matrix index out of range");
    *out = m->m(i, j);
  });
}

int ordino_matrix_save_csv(const ordino_matrix* m, const char* path) {
  return guarded([&] {
    need(m, "m");
    need(path, "path");
    ordino::save_similarity_csv(m->m, path);
  });
}

int ordino_ordinality_score(const ordino_matrix* m, double* out) {
  return guarded([&] {
    need(m, "m");
    need(out, "out");
    *out = ordino::ordinality_score(m->m);
  });
}

int ordino_local_ordinality_score(const ordino_matrix* m, size_t window, double* out) {
  return guarded([&] {
    need(m, "m");
    need(out, "out");
    *out = ordino::local_ordinality_score(m->m, window);
  });
}

int ordino_plot_heatmap(const ordino_matrix* m, const char* ppm_path, size_t cell) {
  return guarded([&] {
    need(m, "m");
    need(ppm_path, "ppm_path");
    ordino::write_heatmap_ppm(m->m, ppm_path, cell == 0 ? 8 : cell);
  });
}

void ordino_matrix_free(ordino_matrix* m) { delete m; }

int ordino_sweep(const ordino_config* base, const char* kind, const char* grid, size_t seeds, const char* csv_path,
                 char** csv_out) {
  return guarded([&] {
    need(base, "base");
    need(kind, "kind");
    const ordino::SweepKind k = ordino::parse_sweep_kind(kind);
    std::vector<std::string> cells;
    if (grid != nullptr) {
      std::stringstream ss(grid);
      std::string cell;
      while (std::getline(ss, cell, ','))
        if (!cell.empty()) cells.push_back(cell);
    }
    const std::string csv = ordino::sweep_csv(k, ordino::sweep(k, cells, base->cfg, seeds == 0 ? 1 : seeds));
    if (csv_path != nullptr) write_file(csv_path, csv);
    if (csv_out != nullptr) *csv_out = dup_string(csv);
  });
}

}  // extern "C"
