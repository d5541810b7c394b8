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

#include <cstddef>

#include <json.hpp>

#include "provfsl/error.hpp"

namespace provfsl {

/// Pair-level confusion counts. The positive class is "dissimilar".
struct confusion_counts {
	std::size_t tp = 0;
	std::size_t fp = 0;
	std::size_t fn = 0;
	std::size_t tn = 0;

	std::size_t total() const { return tp + fp + fn + tn; }

	void add(bool actual_positive, bool predicted_positive) {
		if (actual_positive) {
			++(predicted_positive ? tp : fn);
		} else {
			++(predicted_positive ? fp : tn);
		}
	}

	confusion_counts& operator+=(const confusion_counts& o) {
		tp += o.tp;
		fp += o.fp;
		fn += o.fn;
		tn += o.tn;
		return *this;
	}

	bool operator==(const confusion_counts&) const = default;
};

struct metrics {
	double precision = 0.0;
	double recall = 0.0;
	double f1 = 0.0;
	double accuracy = 0.0;
	bool precision_undefined = false; // no positive predictions
	bool recall_undefined = false;    // no positive instances
};

/// Ratios with an empty denominator are reported as 0 and flagged.
inline metrics compute_metrics(const confusion_counts& c) {
	if (c.total() == 0) {
		throw error(error_kind::data, "metrics need at least one evaluated pair");
	}
	metrics m;
	const auto ratio = [](std::size_t num, std::size_t den, bool& undefined) {
		undefined = den == 0;
		return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
	};
	m.precision = ratio(c.tp, c.tp + c.fp, m.precision_undefined);
	m.recall = ratio(c.tp, c.tp + c.fn, m.recall_undefined);
	m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
	m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
	return m;
}

inline nlohmann::ordered_json to_json(const confusion_counts& c) {
	return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
}

inline nlohmann::ordered_json to_json(const metrics& m) {
	nlohmann::ordered_json j{{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
	if (m.precision_undefined) j["precision_undefined"] = true;
	if (m.recall_undefined) j["recall_undefined"] = true;
	return j;
}

} // namespace provfsl
