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

#include <cmath>
#include <sstream>

#include "provfsl/fewshot.hpp"

using namespace provfsl;

namespace {

// Independent forward pass: plain loops over the documented layer shapes.
std::vector<double> oracle_forward(const subnet_params& p, const std::vector<double>& x) {
	std::vector<double> cur = x;
	for (std::size_t k = 0; k < subnet_layers; ++k) {
		const auto w = p.weight(k);
		const auto b = p.bias(k);
		std::vector<double> next(static_cast<std::size_t>(w.rows()));
		for (Eigen::Index r = 0; r < w.rows(); ++r) {
			double acc = b(r);
			for (Eigen::Index c = 0; c < w.cols(); ++c) {
				acc += w(r, c) * cur[static_cast<std::size_t>(c)];
			}
			const bool relu = k + 1 < subnet_layers || p.final_activation();
			next[static_cast<std::size_t>(r)] = relu && acc < 0.0 ? 0.0 : acc;
		}
		cur = std::move(next);
	}
	return cur;
}

std::vector<double> random_vector(rng& r, std::size_t n, double scale = 1.0) {
	std::vector<double> v(n);
	for (auto& x : v) x = r.normal() * scale;
	return v;
}

event_pair make_pair(std::vector<double> a, std::vector<double> b, int y) {
	event_pair p;
	p.a.values = std::move(a);
	p.b.values = std::move(b);
	p.y = y;
	p.kind = y == 1 ? pair_kind::benign_adv : pair_kind::benign_benign;
	return p;
}

// Two separated Gaussian blobs; similar pairs within a blob, dissimilar across.
pair_dataset blob_pairs(std::size_t n, std::size_t dim, std::uint64_t seed) {
	rng r(seed);
	auto sample = [&](double centre) {
		auto v = random_vector(r, dim, 0.3);
		for (auto& x : v) x += centre;
		return v;
	};
	pair_dataset d;
	for (std::size_t i = 0; i < n; ++i) {
		const auto which = i % 4;
		if (which == 0) d.pairs.push_back(make_pair(sample(0.0), sample(0.0), 0));
		else if (which == 1) {
			auto p = make_pair(sample(1.0), sample(1.0), 0);
			p.kind = pair_kind::adv_adv;
			d.pairs.push_back(p);
		} else d.pairs.push_back(make_pair(sample(0.0), sample(1.0), 1));
	}
	return d;
}

} // namespace

TEST(subnet, default_shapes) {
	const subnet_params p(50, 128);
	EXPECT_EQ(p.weight(0).rows(), 128);
	EXPECT_EQ(p.weight(0).cols(), 50);
	EXPECT_EQ(p.weight(2).rows(), 128);
	EXPECT_EQ(p.size(), 128u * 50 + 128 + 2 * (128u * 128 + 128));
	EXPECT_THROW(subnet_params(0, 4), error);
}

TEST(subnet, trivial_forward_cases) {
	const subnet_params zero(50, 128);
	const auto out = forward_subnet(zero, std::vector<double>(50, 0.0));
	EXPECT_EQ(out.size(), 128);
	EXPECT_EQ(out.norm(), 0.0);

	subnet_params unit(1, 1);
	for (std::size_t k = 0; k < subnet_layers; ++k) unit.weight(k)(0, 0) = 1.0;
	EXPECT_EQ(forward_subnet(unit, std::vector<double>{2.0})(0), 2.0);
	EXPECT_EQ(forward_subnet(unit, std::vector<double>{-2.0})(0), 0.0);
	subnet_params linear_out(1, 1, false);
	for (std::size_t k = 0; k < subnet_layers; ++k) linear_out.weight(k)(0, 0) = 1.0;
	linear_out.bias(2)(0) = -5.0;
	EXPECT_EQ(forward_subnet(linear_out, std::vector<double>{2.0})(0), -3.0);
	EXPECT_THROW(forward_subnet(zero, std::vector<double>(3, 0.0)), error);
}

TEST(subnet, forward_matches_loop_oracle) {
	for (bool final_relu : {true, false}) {
		subnet_params p(50, 128, final_relu);
		p.init_he_uniform(0);
		rng r(123);
		for (int trial = 0; trial < 10; ++trial) {
			const auto x = random_vector(r, 50);
			const auto got = forward_subnet(p, x);
			const auto want = oracle_forward(p, x);
			for (std::size_t i = 0; i < want.size(); ++i) {
				EXPECT_NEAR(got(static_cast<Eigen::Index>(i)), want[i], 1e-12);
			}
		}
	}
}

TEST(subnet, tiny_net_by_hand) {
	// 2 -> 2 -> 2 -> 2 with hand-picked weights.
	subnet_params p(2, 2);
	p.weight(0) << 1.0, -1.0, 0.5, 2.0;
	p.bias(0) << 0.0, -1.0;
	p.weight(1) << 1.0, 1.0, -1.0, 1.0;
	p.bias(1) << 0.5, 0.0;
	p.weight(2) << 2.0, 0.0, 0.0, 1.0;
	p.bias(2) << 0.0, 0.0;
	// x = (1, 2): layer 1 -> relu(-1, 3.5) = (0, 3.5); layer 2 -> (4, 3.5); layer 3 -> (8, 3.5).
	const auto fa = forward_subnet(p, std::vector<double>{1.0, 2.0});
	EXPECT_NEAR(fa(0), 8.0, 1e-12);
	EXPECT_NEAR(fa(1), 3.5, 1e-12);
	// x = (3, 0): layer 1 -> (3, 0.5); layer 2 -> (4, 0) after relu(-2.5); layer 3 -> (8, 0).
	const auto fb = forward_subnet(p, std::vector<double>{3.0, 0.0});
	EXPECT_NEAR(fb(0), 8.0, 1e-12);
	EXPECT_NEAR(fb(1), 0.0, 1e-12);
	EXPECT_NEAR(pair_distance(p, std::vector<double>{1.0, 2.0}, std::vector<double>{3.0, 0.0}), 3.5, 1e-12);
}

TEST(subnet, distance_symmetry_and_identity) {
	subnet_params p(50, 128);
	p.init_he_uniform(5);
	rng r(9);
	for (int i = 0; i < 1000; ++i) {
		const auto a = random_vector(r, 50);
		const auto b = random_vector(r, 50);
		ASSERT_EQ(pair_distance(p, a, b), pair_distance(p, b, a));
		if (i < 20) {
			EXPECT_EQ(pair_distance(p, a, a), 0.0);
		}
	}
}

TEST(contrastive, loss_values_and_errors) {
	EXPECT_EQ(contrastive_loss(0.0, 0, 1.0), 0.0);
	EXPECT_EQ(contrastive_loss(1.0, 1, 1.0), 0.0);
	EXPECT_EQ(contrastive_loss(3.0, 1, 1.0), 0.0);
	EXPECT_DOUBLE_EQ(contrastive_loss(0.5, 1, 1.0), 0.125);
	EXPECT_DOUBLE_EQ(contrastive_loss(2.0, 0, 1.0), 2.0);
	EXPECT_THROW(contrastive_loss(-0.1, 0, 1.0), error);
	EXPECT_THROW(contrastive_loss(0.1, 0, 0.0), error);
}

TEST(contrastive, loss_shape) {
	const double m = 1.5;
	double prev_similar = -1.0, prev_dissimilar = 1e9;
	double prev_slope_similar = -1e9, prev_slope_dissimilar = -1e9;
	for (int i = 0; i <= 400; ++i) {
		const double d = i * 0.01;
		const double ls = contrastive_loss(d, 0, m);
		const double ld = contrastive_loss(d, 1, m);
		EXPECT_GE(ls, 0.0);
		EXPECT_GE(ld, 0.0);
		EXPECT_EQ(ls == 0.0, d == 0.0);
		EXPECT_EQ(ld == 0.0, d >= m);
		EXPECT_GE(ls, prev_similar);
		EXPECT_LE(ld, prev_dissimilar);
		prev_similar = ls;
		prev_dissimilar = ld;
		// Numerical slope: increasing for similar pairs, non-positive and
		// non-decreasing for dissimilar pairs.
		const double h = 1e-6;
		const double ss = (contrastive_loss(d + h, 0, m) - contrastive_loss(std::max(0.0, d - h), 0, m)) /
		                  (d + h - std::max(0.0, d - h));
		const double sd = (contrastive_loss(d + h, 1, m) - contrastive_loss(std::max(0.0, d - h), 1, m)) /
		                  (d + h - std::max(0.0, d - h));
		EXPECT_NEAR(ss, contrastive_loss_slope(d, 0, m), 1e-5);
		if (std::abs(d - m) > 2 * h) {
			EXPECT_NEAR(sd, contrastive_loss_slope(d, 1, m), 1e-5);
		}
		EXPECT_GE(ss, prev_slope_similar - 1e-9);
		EXPECT_LE(sd, 1e-9);
		EXPECT_GE(sd, prev_slope_dissimilar - 1e-9);
		prev_slope_similar = ss;
		prev_slope_dissimilar = sd;
	}
}

TEST(gradient, zero_in_flat_region) {
	subnet_params p(4, 6);
	p.init_he_uniform(1);
	rng r(2);
	std::vector<event_pair> batch;
	while (batch.size() < 5) {
		auto pr = make_pair(random_vector(r, 4, 5.0), random_vector(r, 4, 5.0), 1);
		if (pair_distance(p, pr.a.values, pr.b.values) > 0.5) batch.push_back(pr);
	}
	const auto g = batch_gradient(p, batch, 0.5);
	EXPECT_EQ(g.loss, 0.0);
	for (double v : g.gradient) EXPECT_EQ(v, 0.0);
}

TEST(gradient, finite_difference_on_random_configurations) {
	rng r(2026);
	for (int config = 0; config < 20; ++config) {
		const std::size_t in = 2 + r.below(6);
		const std::size_t hidden = 2 + r.below(7);
		const bool final_relu = config % 2 == 0;
		const double margin = 0.5 + r.uniform() * 2.0;
		subnet_params p(in, hidden, final_relu);
		p.init_he_uniform(1000 + static_cast<std::uint64_t>(config));
		for (auto& b : p.flat()) b += 0.01 * r.normal(); // non-zero biases too
		std::vector<event_pair> batch;
		const std::size_t n = 1 + r.below(6);
		for (std::size_t i = 0; i < n; ++i) {
			batch.push_back(make_pair(random_vector(r, in), random_vector(r, in), static_cast<int>(r.below(2))));
		}
		const auto res = gradient_check(p, batch, margin);
		EXPECT_EQ(res.checked, p.size());
		EXPECT_LT(res.max_relative_error, 1e-4) << "config " << config;
	}
}

TEST(gradient, mean_over_duplicated_pairs) {
	subnet_params p(3, 5);
	p.init_he_uniform(3);
	rng r(4);
	const auto x = make_pair(random_vector(r, 3), random_vector(r, 3), 0);
	const auto y = make_pair(random_vector(r, 3), random_vector(r, 3), 1);
	const std::vector<event_pair> one_x{x}, one_y{y}, mixed{x, x, y};
	const auto gx = batch_gradient(p, one_x, 2.0).gradient;
	const auto gy = batch_gradient(p, one_y, 2.0).gradient;
	const auto gm = batch_gradient(p, mixed, 2.0).gradient;
	for (std::size_t i = 0; i < gm.size(); ++i) {
		EXPECT_NEAR(gm[i], (2.0 * gx[i] + gy[i]) / 3.0, 1e-12);
	}
}

TEST(train, separates_blobs) {
	const auto d = blob_pairs(400, 50, 17);
	train_config cfg;
	cfg.epochs = 30;
	cfg.seed = 3;
	const auto run = train(d, cfg);
	ASSERT_EQ(run.epoch_loss.size(), 30u);
	EXPECT_LT(run.epoch_loss.back(), 0.05 * cfg.margin * cfg.margin);
	EXPECT_LT(run.epoch_loss.back(), run.epoch_loss.front());
	EXPECT_TRUE(run.model.params.finite());
}

TEST(train, deterministic_and_boundaries) {
	const auto d = blob_pairs(64, 8, 5);
	train_config cfg;
	cfg.epochs = 5;
	cfg.hidden_dim = 16;
	cfg.batch_size = 16;
	cfg.seed = 11;
	const auto a = train(d, cfg);
	const auto b = train(d, cfg);
	EXPECT_EQ(a.epoch_loss, b.epoch_loss);
	EXPECT_EQ(a.model.params, b.model.params);

	cfg.optimizer = optimizer_kind::sgd;
	cfg.learning_rate = 0.05;
	EXPECT_EQ(train(d, cfg).epoch_loss.size(), 5u);

	cfg.epochs = 0;
	const auto init = train(d, cfg);
	EXPECT_TRUE(init.epoch_loss.empty());
	subnet_params fresh(8, 16);
	fresh.init_he_uniform(11);
	EXPECT_EQ(init.model.params, fresh);

	cfg.epochs = 3;
	cfg.learning_rate = 1e300;
	EXPECT_THROW(train(d, cfg), error);
	EXPECT_THROW(train(pair_dataset{}, train_config{}), error);
	cfg = {};
	cfg.margin = 0.0;
	EXPECT_THROW(train(d, cfg), error);
}

TEST(model, save_load_round_trip) {
	const auto d = blob_pairs(32, 6, 8);
	train_config cfg;
	cfg.epochs = 2;
	cfg.hidden_dim = 7;
	auto run = train(d, cfg);
	run.model.threshold = 0.4375;
	std::stringstream first;
	run.model.save(first);
	const auto loaded = siamese_model::load(first);
	std::stringstream second;
	loaded.save(second);
	EXPECT_EQ(first.str(), second.str());
	EXPECT_EQ(loaded.params, run.model.params);
	EXPECT_EQ(loaded.threshold, run.model.threshold);
	EXPECT_EQ(loaded.meta.hidden_dim, 7u);

	const auto bytes = first.str();
	std::stringstream truncated(bytes.substr(0, bytes.size() - 40));
	EXPECT_THROW(siamese_model::load(truncated), error);
}
