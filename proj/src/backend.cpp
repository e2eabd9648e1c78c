// Copyright 2026 The sensekit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sensekit/backend.hpp"

#include <fstream>
#include <set>

#include "sensekit/error.hpp"
#include "sensekit/worker.hpp"

namespace sensekit {

std::string_view backend_kind_name(BackendKind kind) {
  switch (kind) {
    case BackendKind::toy:
      return "toy";
    case BackendKind::logits_file:
      return "logits_file";
    case BackendKind::external_worker:
      return "external_worker";
  }
  return "unknown";
}

ScorerBackend ScorerBackend::parse(std::string_view descriptor) {
  const auto c1 = descriptor.find(':');
  const auto c2 = c1 == std::string_view::npos ? c1 : descriptor.find(':', c1 + 1);
  if (c2 == std::string_view::npos) {
    throw UsageError("backend descriptor '" + std::string(descriptor) +
                     "' is not of the form kind:id:source");
  }
  const auto kind = descriptor.substr(0, c1);
  ScorerBackend b;
  if (kind == "toy") {
    b.kind = BackendKind::toy;
  } else if (kind == "logits_file" || kind == "logits") {
    b.kind = BackendKind::logits_file;
  } else if (kind == "external_worker" || kind == "worker") {
    b.kind = BackendKind::external_worker;
  } else {
    throw UsageError("unknown backend kind '" + std::string(kind) + "'");
  }
  b.id = std::string(descriptor.substr(c1 + 1, c2 - c1 - 1));
  b.source = std::string(descriptor.substr(c2 + 1));
  if (b.id.empty()) throw UsageError("backend descriptor has an empty id");
  if (b.source.empty()) throw UsageError("backend '" + b.id + "' has an empty source");
  return b;
}

std::string ScorerBackend::descriptor() const {
  return std::string(backend_kind_name(kind)) + ":" + id + ":" + source;
}

void save_toy_model(const std::filesystem::path& path, const ToyModel& model,
                    const nlohmann::json& extra) {
  const auto& v = model.params.values();
  nlohmann::json j = {
      {"format", "sensekit.toy_scorer"},
      {"version", kToyModelVersion},
      {"dims",
       {{"dim", model.params.dims().dim},
        {"hidden", model.params.dims().hidden},
        {"buckets", model.params.dims().buckets}}},
      {"seed", model.config.seed},
      {"config", to_json(model.config)},
      {"meta", extra},
      {"values", std::vector<double>(v.data(), v.data() + v.size())},
  };
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << j.dump() << "\n";
}

ToyModel load_toy_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open params file '" + path.string() + "'");
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.value("format", "") != "sensekit.toy_scorer") {
      throw DataError(path.string() + ": not a toy scorer params file");
    }
    if (j.at("version").get<int>() != kToyModelVersion) {
      throw DataError(path.string() + ": unsupported params version " +
                      j.at("version").dump());
    }
    const auto& d = j.at("dims");
    const ToyDims dims{d.at("dim").get<Index>(), d.at("hidden").get<Index>(),
                       d.at("buckets").get<Index>()};
    ToyModel model;
    model.config = train_config_from_json(j.at("config"));
    if (!(model.config.dims == dims)) {
      throw DataError(path.string() + ": dims disagree with the embedded config");
    }
    model.params = ToyScorerParams<double>(dims);
    const auto values = j.at("values").get<std::vector<double>>();
    if (static_cast<Index>(values.size()) != model.params.size()) {
      throw DataError(path.string() + ": expected " + std::to_string(model.params.size()) +
                      " parameters for the declared dims, found " +
                      std::to_string(values.size()));
    }
    model.params.values() =
        Eigen::Map<const VectorXd>(values.data(), static_cast<Index>(values.size()));
    if (!model.params.values().allFinite()) {
      throw DataError(path.string() + ": non-finite parameter values");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const UsageError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

ScoreMatrix read_logits_file(const std::filesystem::path& path, const std::string& backend_id,
                             std::span<const std::string> ids) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open logits file '" + path.string() + "'");
  const std::set<std::string> wanted(ids.begin(), ids.end());
  std::set<std::string> seen;

  ScoreMatrix m;
  m.backend_id = backend_id;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw DataError(where + ": malformed record");
    }
    if (!j.is_object() || !j.contains("id") || !j.at("id").is_string() ||
        !j.contains("scores") || !j.at("scores").is_array() || j.at("scores").empty()) {
      throw DataError(where + ": record needs a string id and a non-empty scores array");
    }
    const auto id = j.at("id").get<std::string>();
    if (!seen.insert(id).second) throw DataError(where + ": duplicate id '" + id + "'");
    const auto& arr = j.at("scores");
    VectorXd v(static_cast<Index>(arr.size()));
    for (std::size_t k = 0; k < arr.size(); ++k) {
      if (!arr[k].is_number()) throw DataError(where + ": non-numeric score for '" + id + "'");
      v(static_cast<Index>(k)) = arr[k].get<double>();
    }
    if (!v.allFinite()) throw DataError(where + ": non-finite score for '" + id + "'");
    if (!wanted.count(id)) continue;
    if (m.choice_count == 0) m.choice_count = v.size();
    if (v.size() != m.choice_count) {
      throw DataError(where + ": '" + id + "' has " + std::to_string(v.size()) +
                      " scores, earlier records have " + std::to_string(m.choice_count));
    }
    m.rows.emplace(id, std::move(v));
  }

  std::vector<std::string> missing;
  for (const auto& id : wanted) {
    if (!m.rows.count(id)) missing.push_back(id);
  }
  if (!missing.empty()) {
    std::string msg = path.string() + ": missing scores for " + std::to_string(missing.size()) +
                      " id(s):";
    const std::size_t shown = std::min<std::size_t>(missing.size(), 20);
    for (std::size_t k = 0; k < shown; ++k) msg += " " + missing[k];
    if (shown < missing.size()) msg += " ...";
    throw DataError(msg);
  }
  return m;
}

void write_logits_file(const std::filesystem::path& path, const ScoreMatrix& matrix) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (const auto& [id, row] : matrix.rows) {
    out << nlohmann::json{{"id", id},
                          {"scores", std::vector<double>(row.data(), row.data() + row.size())}}
               .dump()
        << "\n";
  }
}

ScoreMatrix load_score_matrix(const ScorerBackend& backend, std::span<const Sample> samples,
                              const LoadOptions& options) {
  ScoreMatrix m;
  m.backend_id = backend.id;
  switch (backend.kind) {
    case BackendKind::toy: {
      ToyModel loaded;
      const ToyModel* model = options.toy_model;
      if (model == nullptr) {
        loaded = load_toy_model(backend.source);
        model = &loaded;
      }
      for (const auto& s : samples) {
        auto x = forward_sample(model->params, s, Mode::eval, nullptr, 0.0,
                                model->config.max_seq_len, model->config.markers);
        if (!m.rows.emplace(x.sample_id, std::move(x.scores)).second) {
          throw DataError("duplicate sample id '" + sample_id(s) + "'");
        }
      }
      break;
    }
    case BackendKind::logits_file: {
      std::vector<std::string> ids;
      for (const auto& s : samples) ids.push_back(sample_id(s));
      m = read_logits_file(backend.source, backend.id, ids);
      break;
    }
    case BackendKind::external_worker: {
      std::vector<WorkerRequest> requests;
      for (const auto& s : samples) {
        WorkerRequest r{sample_id(s), {}};
        for (const auto& in : reconstruct_choices(s, options.markers)) r.texts.push_back(in.text);
        requests.push_back(std::move(r));
      }
      for (auto& [id, row] : score_with_worker(backend.source, requests)) {
        m.rows.emplace(id, std::move(row));
      }
      break;
    }
  }

  for (const auto& s : samples) {
    const auto& row = m.rows.at(sample_id(s));
    if (static_cast<std::size_t>(row.size()) != choice_count(s)) {
      throw DataError("backend '" + backend.id + "': sample '" + sample_id(s) + "' has " +
                      std::to_string(row.size()) + " scores for " +
                      std::to_string(choice_count(s)) + " choices");
    }
    if (!row.allFinite()) {
      throw NumericError("backend '" + backend.id + "': non-finite score for '" +
                         sample_id(s) + "'");
    }
  }
  m.choice_count = samples.empty() ? 0 : static_cast<Index>(choice_count(samples.front()));
  return m;
}

}  // namespace sensekit
