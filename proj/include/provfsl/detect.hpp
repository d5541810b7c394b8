// SPDX-License-Identifier: Apache-2.0

/*
Copyright (C) 2026 The provfsl Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.

*/

#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "provfsl/error.hpp"
#include "provfsl/fewshot.hpp"
#include "provfsl/metrics.hpp"
#include "provfsl/pairs.hpp"

namespace provfsl {

enum class pair_verdict { similar, dissimilar };

/// Dissimilar iff the distance exceeds the threshold; D == tau is similar.
inline pair_verdict classify_distance(double distance, double threshold) {
	return distance > threshold ? pair_verdict::dissimilar : pair_verdict::similar;
}

struct calibration {
	double threshold = 0.0;
	double f1 = 0.0;
	confusion_counts counts;
};

/// Picks the threshold maximizing F1 (positive class: dissimilar, y = 1)
/// among the midpoints of consecutive distinct sorted distances. Ties go to
/// the smaller threshold.
inline calibration calibrate_threshold(std::span<const double> distances, std::span<const int> y) {
	if (distances.empty() || distances.size() != y.size()) {
		throw error(error_kind::data, "calibration needs one label per distance");
	}
	const auto positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
	if (positives == 0 || positives == y.size()) {
		throw error(error_kind::data, "calibration set holds a single class");
	}
	std::vector<std::size_t> order(distances.size());
	std::iota(order.begin(), order.end(), std::size_t{0});
	std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return distances[a] < distances[b]; });

	// Sweep upward: below the first candidate everything is dissimilar.
	confusion_counts c{positives, y.size() - positives, 0, 0};
	bool found = false;
	calibration best;
	for (std::size_t i = 0; i + 1 < order.size(); ++i) {
		if (y[order[i]] == 1) {
			--c.tp;
			++c.fn;
		} else {
			--c.fp;
			++c.tn;
		}
		const double lo = distances[order[i]];
		const double hi = distances[order[i + 1]];
		if (!(hi > lo)) {
			continue;
		}
		const double f1 = compute_metrics(c).f1;
		if (!found || f1 > best.f1) {
			best = {lo + (hi - lo) / 2.0, f1, c};
			found = true;
		}
	}
	if (!found) {
		throw error(error_kind::data, "calibration distances are all equal");
	}
	return best;
}

inline std::vector<double> pair_distances(const siamese_model& m, const pair_dataset& d) {
	std::vector<double> out;
	out.reserve(d.pairs.size());
	for (const auto& p : d.pairs) {
		out.push_back(m.distance(p.a.values, p.b.values));
	}
	return out;
}

inline std::vector<int> pair_labels(const pair_dataset& d) {
	std::vector<int> out;
	out.reserve(d.pairs.size());
	for (const auto& p : d.pairs) {
		out.push_back(p.y);
	}
	return out;
}

/// Calibrates on a validation set and stores the threshold in the model.
inline calibration calibrate_threshold(siamese_model& m, const pair_dataset& val) {
	if (val.pairs.empty()) {
		throw error(error_kind::data, "empty validation set");
	}
	const auto d = pair_distances(m, val);
	const auto y = pair_labels(val);
	auto c = calibrate_threshold(d, y);
	m.threshold = c.threshold;
	return c;
}

inline pair_verdict classify_pair(const siamese_model& m, std::span<const double> a, std::span<const double> b) {
	if (!m.threshold) {
		throw error(error_kind::usage, "model has no calibrated threshold");
	}
	return classify_distance(m.distance(a, b), *m.threshold);
}

inline confusion_counts evaluate_pairs(const siamese_model& m, const pair_dataset& d) {
	if (!m.threshold) {
		throw error(error_kind::usage, "model has no calibrated threshold");
	}
	confusion_counts c;
	for (const auto& p : d.pairs) {
		c.add(p.y == 1, classify_pair(m, p.a.values, p.b.values) == pair_verdict::dissimilar);
	}
	return c;
}

struct reference_set {
	std::vector<event_vector> benign_refs;
	std::vector<event_vector> adv_refs;
	std::size_t k = 5;

	void validate() const {
		if (benign_refs.empty() || adv_refs.empty()) {
			throw error(error_kind::data, "reference set needs benign and adversarial entries");
		}
		if (k < 1) {
			throw error(error_kind::usage, "k must be at least 1");
		}
	}
};

struct verdict {
	label decision = label::benign;
	double score = 0.0;          // mean adversarial distance - mean benign distance
	double benign_distance = 0.0;
	double adv_distance = 0.0;
	std::vector<std::string> references; // "b:<index>" / "a:<index>", nearest first
	bool short_side = false;             // a side had fewer than k references
};

/// Reference events projected through the subnet once, for repeated
/// classification.
class reference_index {
public:
	reference_index(const siamese_model& m, const reference_set& refs) : m_model(&m), m_k(refs.k) {
		refs.validate();
		for (const auto& r : refs.benign_refs) m_benign.push_back(forward_subnet(m.params, r.values));
		for (const auto& r : refs.adv_refs) m_adv.push_back(forward_subnet(m.params, r.values));
	}

	verdict classify(std::span<const double> x) const {
		const vector_d fx = forward_subnet(m_model->params, x);
		verdict v;
		auto side = [&](const std::vector<vector_d>& refs, char tag, double& mean) {
			std::vector<std::pair<double, std::size_t>> d;
			d.reserve(refs.size());
			for (std::size_t i = 0; i < refs.size(); ++i) {
				d.emplace_back(euclidean(fx, refs[i]), i);
			}
			const std::size_t take = std::min(m_k, d.size());
			v.short_side = v.short_side || take < m_k;
			std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(take), d.end());
			double sum = 0.0;
			for (std::size_t i = 0; i < take; ++i) {
				sum += d[i].first;
				v.references.push_back(std::string(1, tag) + ":" + std::to_string(d[i].second));
			}
			mean = sum / static_cast<double>(take);
		};
		side(m_benign, 'b', v.benign_distance);
		side(m_adv, 'a', v.adv_distance);
		v.score = v.adv_distance - v.benign_distance;
		v.decision = v.adv_distance < v.benign_distance ? label::adversarial : label::benign;
		return v;
	}

private:
	const siamese_model* m_model;
	std::size_t m_k;
	std::vector<vector_d> m_benign;
	std::vector<vector_d> m_adv;
};

/// Nearest-reference verdict: adversarial iff the mean of the k smallest
/// distances to adversarial references is below that of benign ones.
inline verdict classify_event(const siamese_model& m, const reference_set& refs, std::span<const double> x) {
	return reference_index(m, refs).classify(x);
}

inline nlohmann::ordered_json to_json(const verdict& v) {
	nlohmann::ordered_json j;
	j["decision"] = std::string(to_string(v.decision));
	j["score"] = v.score;
	j["benign_distance"] = v.benign_distance;
	j["adv_distance"] = v.adv_distance;
	j["references"] = v.references;
	if (v.short_side) {
		j["warning"] = "fewer than k references on one side";
	}
	return j;
}

} // namespace provfsl
