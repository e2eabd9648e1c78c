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

#include "sensekit/analysis.hpp"

#include <algorithm>
#include <bit>
#include <iomanip>
#include <sstream>

#include "sensekit/error.hpp"

namespace sensekit {
namespace {

template <typename A, typename B>
void require_same_keys(const std::map<std::string, A>& a, const std::map<std::string, B>& b,
                       const std::string& what) {
  std::vector<std::string> diff;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      diff.push_back(ia++->first);
    } else if (ia == a.end() || ib->first < ia->first) {
      diff.push_back(ib++->first);
    } else {
      ++ia;
      ++ib;
    }
  }
  if (diff.empty()) return;
  std::string msg = what + ": id sets differ on " + std::to_string(diff.size()) + " id(s):";
  const std::size_t shown = std::min<std::size_t>(diff.size(), 20);
  for (std::size_t k = 0; k < shown; ++k) msg += " " + diff[k];
  if (shown < diff.size()) msg += " ...";
  throw DataError(msg);
}

std::string region_name(const VennRegion& r) {
  if (r.members.empty()) return "none";
  std::string name;
  for (const auto& m : r.members) name += (name.empty() ? "" : "+") + m;
  return name;
}

}  // namespace

double accuracy(const std::map<std::string, Label>& predictions,
                const std::map<std::string, Label>& gold) {
  require_same_keys(predictions, gold, "accuracy");
  if (gold.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& [id, label] : gold) hits += predictions.at(id) == label;
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

CorrectnessBitmap correctness(const std::map<std::string, Label>& predictions,
                              const std::map<std::string, Label>& gold) {
  require_same_keys(predictions, gold, "correctness");
  CorrectnessBitmap out;
  for (const auto& [id, label] : gold) out.emplace(id, predictions.at(id) == label);
  return out;
}

const VennRegion& VennReport::region(std::uint32_t mask) const {
  for (const auto& r : regions) {
    if (r.mask == mask) return r;
  }
  throw UsageError("no Venn region with mask " + std::to_string(mask));
}

std::size_t VennReport::total() const {
  std::size_t n = 0;
  for (const auto& r : regions) n += r.alpha;
  return n;
}

VennReport overlap_analysis(std::span<const CorrectnessBitmap> singles,
                            const CorrectnessBitmap& ensemble,
                            std::span<const std::string> system_names) {
  if (singles.empty() || singles.size() > 16) {
    throw UsageError("overlap_analysis: need between 1 and 16 single systems");
  }
  if (!system_names.empty() && system_names.size() != singles.size()) {
    throw UsageError("overlap_analysis: one name per single system required");
  }
  for (std::size_t i = 0; i < singles.size(); ++i) {
    require_same_keys(singles[i], ensemble, "overlap_analysis");
  }

  VennReport report;
  for (std::size_t i = 0; i < singles.size(); ++i) {
    report.systems.push_back(system_names.empty() ? "model" + std::to_string(i + 1)
                                                  : system_names[i]);
  }
  const std::uint32_t n_regions = 1u << singles.size();
  std::vector<std::uint32_t> masks;
  for (std::uint32_t m = 1; m < n_regions; ++m) masks.push_back(m);
  std::stable_sort(masks.begin(), masks.end(), [](std::uint32_t a, std::uint32_t b) {
    return std::popcount(a) < std::popcount(b);
  });
  masks.push_back(0);

  std::vector<std::size_t> position(n_regions);
  for (std::size_t k = 0; k < masks.size(); ++k) {
    VennRegion r;
    r.mask = masks[k];
    for (std::size_t i = 0; i < singles.size(); ++i) {
      if (masks[k] & (1u << i)) r.members.push_back(report.systems[i]);
    }
    position[masks[k]] = k;
    report.regions.push_back(std::move(r));
  }

  for (const auto& [id, ens_correct] : ensemble) {
    std::uint32_t mask = 0;
    for (std::size_t i = 0; i < singles.size(); ++i) {
      if (singles[i].at(id)) mask |= 1u << i;
    }
    auto& r = report.regions[position[mask]];
    ++r.alpha;
    r.beta += ens_correct;
  }
  return report;
}

nlohmann::json to_json(const VennReport& venn) {
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& r : venn.regions) {
    regions.push_back({{"members", r.members}, {"alpha", r.alpha}, {"beta", r.beta}});
  }
  return {{"systems", venn.systems}, {"regions", regions}};
}

VennReport venn_from_json(const nlohmann::json& j) {
  VennReport v;
  try {
    v.systems = j.at("systems").get<std::vector<std::string>>();
    for (const auto& rj : j.at("regions")) {
      VennRegion r;
      r.members = rj.at("members").get<std::vector<std::string>>();
      for (const auto& m : r.members) {
        const auto it = std::find(v.systems.begin(), v.systems.end(), m);
        if (it == v.systems.end()) throw DataError("Venn region names unknown system '" + m + "'");
        r.mask |= 1u << (it - v.systems.begin());
      }
      r.alpha = rj.at("alpha").get<std::size_t>();
      r.beta = rj.at("beta").get<std::size_t>();
      if (r.beta > r.alpha) throw DataError("Venn region has beta > alpha");
      v.regions.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("Venn report: ") + e.what());
  }
  return v;
}

std::string render_report(const EvaluationReport& report, ReportFormat format) {
  if (format == ReportFormat::structured) {
    nlohmann::json acc = nlohmann::json::array();
    for (const auto& a : report.accuracies) {
      acc.push_back({{"system", a.system}, {"accuracy", a.accuracy}});
    }
    nlohmann::json j = {{"accuracies", acc}, {"config", report.config}};
    j["weights"] = report.weights ? to_json(*report.weights) : nlohmann::json(nullptr);
    j["venn"] = report.venn ? to_json(*report.venn) : nlohmann::json(nullptr);
    return j.dump(2) + "\n";
  }

  std::ostringstream os;
  std::size_t width = 8;
  for (const auto& a : report.accuracies) width = std::max(width, a.system.size());
  if (!report.accuracies.empty()) {
    os << "accuracy\n";
    for (const auto& a : report.accuracies) {
      os << "  " << std::left << std::setw(static_cast<int>(width)) << a.system << "  "
         << std::fixed << std::setprecision(4) << a.accuracy << "\n";
    }
  }
  if (report.weights) {
    const VectorXd w = report.weights->normalized();
    os << "weights (normalized to sum 1)\n";
    for (Index i = 0; i < w.size(); ++i) {
      const auto& ids = report.weights->backend_ids;
      const std::string name =
          static_cast<std::size_t>(i) < ids.size() ? ids[static_cast<std::size_t>(i)]
                                                   : "w" + std::to_string(i + 1);
      os << "  " << std::left << std::setw(static_cast<int>(width)) << name << "  "
         << std::fixed << std::setprecision(6) << w(i) << "\n";
    }
  }
  if (report.venn) {
    os << "overlap (alpha|beta: correct by exactly these singles | also by the ensemble)\n";
    std::size_t rw = 4;
    for (const auto& r : report.venn->regions) rw = std::max(rw, region_name(r).size());
    for (const auto& r : report.venn->regions) {
      os << "  " << std::left << std::setw(static_cast<int>(rw)) << region_name(r) << "  "
         << r.alpha << "|" << r.beta << "\n";
    }
    os << "  total " << report.venn->total() << "\n";
  }
  return os.str();
}

EvaluationReport parse_report(const std::string& structured) {
  EvaluationReport report;
  try {
    const auto j = nlohmann::json::parse(structured);
    for (const auto& a : j.at("accuracies")) {
      report.accuracies.push_back(
          {a.at("system").get<std::string>(), a.at("accuracy").get<double>()});
    }
    report.config = j.value("config", nlohmann::json::object());
    if (j.contains("weights") && !j.at("weights").is_null()) {
      report.weights = weights_from_json(j.at("weights"));
    }
    if (j.contains("venn") && !j.at("venn").is_null()) report.venn = venn_from_json(j.at("venn"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("report: ") + e.what());
  }
  return report;
}

}  // namespace sensekit
