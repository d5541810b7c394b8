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

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "provfsl/detect.hpp"

using namespace provfsl;

namespace {

struct sweep_result {
	double threshold;
	double f1;
	std::size_t tp, fp, fn, tn;
};

// Exhaustive sweep: every midpoint, counted pair by pair.
sweep_result oracle_sweep(const std::vector<double>& d, const std::vector<int>& y) {
	std::set<double> distinct(d.begin(), d.end());
	const std::vector<double> sorted(distinct.begin(), distinct.end());
	sweep_result best{0, -1, 0, 0, 0, 0};
	for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
		const double tau = sorted[i] + (sorted[i + 1] - sorted[i]) / 2.0;
		std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
		for (std::size_t j = 0; j < d.size(); ++j) {
			const bool predicted = d[j] > tau;
			if (y[j] == 1 && predicted) ++tp;
			if (y[j] == 1 && !predicted) ++fn;
			if (y[j] == 0 && predicted) ++fp;
			if (y[j] == 0 && !predicted) ++tn;
		}
		const double f1 = tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
		if (f1 > best.f1) best = {tau, f1, tp, fp, fn, tn};
	}
	return best;
}

std::vector<double> blob(rng& r, std::size_t dim, double centre) {
	std::vector<double> v(dim);
	for (auto& x : v) x = centre + 0.4 * r.normal();
	return v;
}

siamese_model trained_blob_model(pair_dataset& val) {
	rng r(31);
	auto pairs = [&](std::size_t n) {
		pair_dataset d;
		for (std::size_t i = 0; i < n; ++i) {
			event_pair p;
			switch (i % 4) {
			case 0: p = {{blob(r, 10, 0.0), label::benign, ""}, {blob(r, 10, 0.0), label::benign, ""}, 0, pair_kind::benign_benign, ""}; break;
			case 1: p = {{blob(r, 10, 1.0), label::adversarial, ""}, {blob(r, 10, 1.0), label::adversarial, ""}, 0, pair_kind::adv_adv, ""}; break;
			default: p = {{blob(r, 10, 0.0), label::benign, ""}, {blob(r, 10, 1.0), label::adversarial, ""}, 1, pair_kind::benign_adv, ""}; break;
			}
			d.pairs.push_back(p);
		}
		return d;
	};
	const auto train_set = pairs(200);
	val = pairs(120);
	train_config cfg;
	cfg.epochs = 3; // deliberately undertrained so validation distances overlap
	cfg.hidden_dim = 16;
	cfg.seed = 2;
	return train(train_set, cfg).model;
}

} // namespace

TEST(calibrate, separable_distances) {
	const std::vector<double> d{0.1, 0.2, 1.8, 1.9};
	const std::vector<int> y{0, 0, 1, 1};
	const auto c = calibrate_threshold(d, y);
	EXPECT_DOUBLE_EQ(c.threshold, 1.0);
	EXPECT_DOUBLE_EQ(c.f1, 1.0);
	EXPECT_EQ(c.counts, (confusion_counts{2, 0, 0, 2}));
}

TEST(calibrate, degenerate_inputs) {
	EXPECT_THROW(calibrate_threshold(std::vector<double>{0.5, 0.5, 0.5}, std::vector<int>{0, 1, 1}), error);
	EXPECT_THROW(calibrate_threshold(std::vector<double>{0.1, 0.5}, std::vector<int>{1, 1}), error);
	EXPECT_THROW(calibrate_threshold(std::vector<double>{}, std::vector<int>{}), error);
}

TEST(calibrate, ties_prefer_smaller_threshold) {
	// Thresholds 0.15 and 0.25 both give F1 = 0.8; the smaller wins.
	const std::vector<double> d{0.1, 0.2, 0.3, 0.4};
	const std::vector<int> y{0, 1, 0, 1};
	const auto c = calibrate_threshold(d, y);
	const auto o = oracle_sweep({d.begin(), d.end()}, {y.begin(), y.end()});
	EXPECT_DOUBLE_EQ(c.threshold, o.threshold);
	EXPECT_DOUBLE_EQ(c.f1, o.f1);
}

TEST(calibrate, matches_sweep_on_random_distances) {
	rng r(77);
	for (int trial = 0; trial < 50; ++trial) {
		const std::size_t n = 2 + r.below(60);
		std::vector<double> d(n);
		std::vector<int> y(n);
		for (std::size_t i = 0; i < n; ++i) {
			y[i] = static_cast<int>(r.below(2));
			// Coarse grid so repeated distances occur.
			d[i] = std::round((y[i] + r.normal()) * 8.0) / 8.0;
		}
		y[0] = 0;
		y[1] = 1;
		if (std::set<double>(d.begin(), d.end()).size() < 2) continue;
		const auto c = calibrate_threshold(d, y);
		const auto o = oracle_sweep(d, y);
		EXPECT_DOUBLE_EQ(c.threshold, o.threshold) << trial;
		EXPECT_EQ(c.counts, (confusion_counts{o.tp, o.fp, o.fn, o.tn})) << trial;
	}
}

TEST(calibrate, blob_model_matches_sweep) {
	pair_dataset val;
	auto model = trained_blob_model(val);
	const auto c = calibrate_threshold(model, val);
	ASSERT_TRUE(model.threshold);
	EXPECT_EQ(*model.threshold, c.threshold);
	const auto o = oracle_sweep(pair_distances(model, val), pair_labels(val));
	auto near = [](std::size_t a, std::size_t b) { return (a > b ? a - b : b - a) <= 1; };
	EXPECT_TRUE(near(c.counts.tp, o.tp) && near(c.counts.fp, o.fp) && near(c.counts.fn, o.fn) && near(c.counts.tn, o.tn));
	// Reclassifying the validation pairs reproduces the optimal matrix.
	EXPECT_EQ(evaluate_pairs(model, val), c.counts);
}

TEST(classify_pair, boundary_and_monotonicity) {
	EXPECT_EQ(classify_distance(0.5, 0.5), pair_verdict::similar);
	EXPECT_EQ(classify_distance(0.5000001, 0.5), pair_verdict::dissimilar);
	EXPECT_EQ(classify_distance(0.0, 0.0), pair_verdict::similar);
	for (double d : {0.0, 0.3, 0.9, 2.0}) {
		bool was_similar = false;
		for (double tau = 0.0; tau < 3.0; tau += 0.05) {
			const bool similar = classify_distance(d, tau) == pair_verdict::similar;
			EXPECT_TRUE(similar || !was_similar);
			was_similar = similar;
		}
	}
	pair_dataset val;
	auto model = trained_blob_model(val);
	const auto& a = val.pairs.front().a.values;
	EXPECT_THROW(classify_pair(model, a, a), error);
	model.threshold = 0.0;
	EXPECT_EQ(classify_pair(model, a, a), pair_verdict::similar);
}

TEST(classify_event, reference_rules) {
	subnet_params p(2, 2);
	for (std::size_t k = 0; k < subnet_layers; ++k) p.weight(k) = matrix::Identity(2, 2);
	siamese_model m;
	m.params = p;
	const event_vector b0{{0.0, 0.0}, label::benign, ""};
	const event_vector b1{{0.0, 1.0}, label::benign, ""};
	const event_vector a0{{3.0, 3.0}, label::adversarial, ""};
	const event_vector a1{{4.0, 3.0}, label::adversarial, ""};
	reference_set refs{{b0, b1}, {a0, a1}, 1};

	auto v = classify_event(m, refs, a0.values);
	EXPECT_EQ(v.decision, label::adversarial);
	EXPECT_EQ(v.adv_distance, 0.0);
	EXPECT_EQ(v.references, (std::vector<std::string>{"b:1", "a:0"}));

	// Equidistant from (1, 0) and (1, 2): exact tie -> benign.
	reference_set sym{{{{1.0, 0.0}, label::benign, ""}}, {{{1.0, 2.0}, label::adversarial, ""}}, 1};
	v = classify_event(m, sym, std::vector<double>{1.0, 1.0});
	EXPECT_EQ(v.decision, label::benign);
	EXPECT_EQ(v.score, 0.0);

	// k larger than a side: all references used, flagged.
	refs.k = 5;
	v = classify_event(m, refs, std::vector<double>{0.0, 0.5});
	EXPECT_TRUE(v.short_side);
	EXPECT_EQ(v.decision, label::benign);
	EXPECT_DOUBLE_EQ(v.benign_distance, 0.5);
	EXPECT_EQ(to_json(v).value("warning", ""), "fewer than k references on one side");

	EXPECT_THROW(classify_event(m, reference_set{{}, {a0}, 1}, a0.values), error);
	EXPECT_THROW(classify_event(m, reference_set{{b0}, {a0}, 0}, a0.values), error);
}

TEST(classify_event, duplicates_beyond_rank_k_do_not_matter) {
	pair_dataset val;
	const auto model = trained_blob_model(val);
	reference_set refs;
	refs.k = 3;
	for (std::size_t i = 0; i < 20; ++i) {
		refs.benign_refs.push_back(val.pairs[i].a);
		if (val.pairs[i].kind != pair_kind::benign_benign) refs.adv_refs.push_back(val.pairs[i].b);
	}
	const reference_index index(model, refs);
	for (std::size_t i = 20; i < 60; ++i) {
		const auto& x = val.pairs[i].b.values;
		const auto base = index.classify(x);
		// Duplicate the reference ranked last on each side.
		auto grown = refs;
		auto far_of = [&](const std::vector<event_vector>& side) {
			std::size_t far = 0;
			double worst = -1;
			for (std::size_t j = 0; j < side.size(); ++j) {
				const double d = model.distance(x, side[j].values);
				if (d > worst) worst = d, far = j;
			}
			return side[far];
		};
		grown.benign_refs.push_back(far_of(refs.benign_refs));
		grown.adv_refs.push_back(far_of(refs.adv_refs));
		const auto again = classify_event(model, grown, x);
		EXPECT_EQ(again.decision, base.decision);
		EXPECT_EQ(again.score, base.score);
		EXPECT_EQ(index.classify(x).references, base.references);
	}
}
