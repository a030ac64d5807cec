#pragma once

// Synthetic corpora with known labels: each class is a unit-variance
// Gaussian cluster around a center; centers share one common axis so that
// every pair of centers is exactly 60 degrees apart.

#include "coex/coexpand.hpp"
#include "coex/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace planted {

struct Options {
  int classes = 5;
  int dim = 32;
  int seeds_per_class = 5;
  int candidates = 200;
  double center_norm = 8.0;
  std::uint64_t seed = 7;
};

struct Corpus {
  coex::EmbeddingStore store;
  std::map<std::string, std::vector<std::string>> seed_ids;  // class -> seed pair ids
  std::vector<std::string> candidates;
  std::map<std::string, std::string> label;  // candidate id -> class
  std::vector<Eigen::VectorXd> centers;
};

inline std::string class_name(int j) { return "rel" + std::to_string(j); }

/// Pairwise angle between centers in degrees (for asserting the geometry).
inline double min_center_angle(const Corpus& c) {
  double best = 180.0;
  for (std::size_t a = 0; a < c.centers.size(); ++a)
    for (std::size_t b = a + 1; b < c.centers.size(); ++b) {
      const double cs = c.centers[a].dot(c.centers[b]) / (c.centers[a].norm() * c.centers[b].norm());
      best = std::min(best, std::acos(std::clamp(cs, -1.0, 1.0)) * 180.0 / M_PI);
    }
  return best;
}

inline Corpus make(const Options& o, const std::string& seed_prefix = "seed") {
  Corpus c;
  std::mt19937_64 gen(o.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  if (o.classes + 1 > o.dim) throw std::invalid_argument("planted: dim too small");

  for (int j = 0; j < o.classes; ++j) {
    Eigen::VectorXd center = Eigen::VectorXd::Zero(o.dim);
    center[0] = 1.0;
    center[j + 1] = 1.0;
    c.centers.push_back(center.normalized() * o.center_norm);
  }

  auto sample = [&](int j) {
    Eigen::VectorXd v = c.centers[static_cast<std::size_t>(j)];
    for (int i = 0; i < o.dim; ++i) v[i] += noise(gen);
    return coex::Vector(v.cast<float>());
  };
  auto put_all = [&](const std::string& id, int j, bool with_mention) {
    if (with_mention) c.store.put({id, coex::Provenance::mention_context}, {sample(j), coex::Provenance::mention_context, {}});
    c.store.put({id, coex::Provenance::analogous_pattern}, {sample(j), coex::Provenance::analogous_pattern, {}});
    c.store.put({id, coex::Provenance::contrastive_pattern}, {sample(j), coex::Provenance::contrastive_pattern, {}});
  };

  for (int j = 0; j < o.classes; ++j)
    for (int s = 0; s < o.seeds_per_class; ++s) {
      const std::string id = seed_prefix + ":" + class_name(j) + ":" + std::to_string(s);
      put_all(id, j, true);
      c.seed_ids[class_name(j)].push_back(id);
    }

  // Labels are assigned round-robin, ids are shuffled so id order carries no
  // label information.
  std::vector<int> labels;
  for (int i = 0; i < o.candidates; ++i) labels.push_back(i % o.classes);
  std::shuffle(labels.begin(), labels.end(), gen);
  for (int i = 0; i < o.candidates; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "cand-%04d", i);
    put_all(buf, labels[static_cast<std::size_t>(i)], true);
    c.candidates.emplace_back(buf);
    c.label[buf] = class_name(labels[static_cast<std::size_t>(i)]);
  }
  return c;
}

struct Precision {
  std::map<std::string, std::pair<int, int>> per_class;  // class -> (correct, added)
  double min_precision() const {
    double m = 1.0;
    for (const auto& [cls, v] : per_class)
      if (v.second > 0) m = std::min(m, static_cast<double>(v.first) / v.second);
    return m;
  }
  int total_added() const {
    int n = 0;
    for (const auto& [cls, v] : per_class) n += v.second;
    return n;
  }
};

inline Precision precision(const Corpus& c, const coex::ExpansionTrace& trace) {
  Precision p;
  for (const auto& [cls, set] : trace.state) p.per_class[cls];
  for (const auto& rec : trace.audit) {
    auto& slot = p.per_class[rec.result.class_name];
    ++slot.second;
    if (c.label.at(rec.result.pair_id) == rec.result.class_name) ++slot.first;
  }
  return p;
}

}  // namespace planted
