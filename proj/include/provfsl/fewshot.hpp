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

// Siamese network: one fully connected ReLU subnet applied to both members
// of a pair, trained with the contrastive loss
//
//   L(D, y) = (1 - y) * D^2 / 2 + y * max(0, m - D)^2 / 2
//
// where D is the Euclidean distance between the two subnet outputs, y = 1
// marks a dissimilar pair and m is the margin. There is exactly one
// parameter store; both branches read it.

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "provfsl/embed.hpp"
#include "provfsl/error.hpp"
#include "provfsl/kvconfig.hpp"
#include "provfsl/pairs.hpp"
#include "provfsl/rng.hpp"

namespace provfsl {

using matrix = Eigen::MatrixXd;
using vector_d = Eigen::VectorXd;

inline constexpr std::size_t subnet_layers = 3;

/// Weights and biases of the three layers, stored contiguously so that
/// optimizers and gradient checks can treat them as one flat vector.
/// Layer k maps width(k) -> width(k + 1); matrices are column-major.
class subnet_params {
public:
	subnet_params() = default;
	subnet_params(std::size_t input_dim, std::size_t hidden_dim, bool final_activation = true)
		: m_widths{input_dim, hidden_dim, hidden_dim, hidden_dim}, m_final_activation(final_activation) {
		if (input_dim == 0 || hidden_dim == 0) {
			throw error(error_kind::usage, "subnet dimensions must be positive");
		}
		std::size_t offset = 0;
		for (std::size_t k = 0; k < subnet_layers; ++k) {
			m_w_offset[k] = offset;
			offset += m_widths[k + 1] * m_widths[k];
			m_b_offset[k] = offset;
			offset += m_widths[k + 1];
		}
		m_data.assign(offset, 0.0);
	}

	std::size_t input_dim() const { return m_widths[0]; }
	std::size_t hidden_dim() const { return m_widths[1]; }
	std::size_t output_dim() const { return m_widths[subnet_layers]; }
	bool final_activation() const { return m_final_activation; }
	std::size_t size() const { return m_data.size(); }

	std::span<double> flat() { return m_data; }
	std::span<const double> flat() const { return m_data; }

	Eigen::Map<matrix> weight(std::size_t k) {
		return {m_data.data() + m_w_offset[k], static_cast<Eigen::Index>(m_widths[k + 1]), static_cast<Eigen::Index>(m_widths[k])};
	}
	Eigen::Map<const matrix> weight(std::size_t k) const {
		return {m_data.data() + m_w_offset[k], static_cast<Eigen::Index>(m_widths[k + 1]), static_cast<Eigen::Index>(m_widths[k])};
	}
	Eigen::Map<vector_d> bias(std::size_t k) {
		return {m_data.data() + m_b_offset[k], static_cast<Eigen::Index>(m_widths[k + 1])};
	}
	Eigen::Map<const vector_d> bias(std::size_t k) const {
		return {m_data.data() + m_b_offset[k], static_cast<Eigen::Index>(m_widths[k + 1])};
	}

	bool same_shape(const subnet_params& o) const {
		return m_widths == o.m_widths && m_final_activation == o.m_final_activation;
	}

	bool finite() const {
		return std::all_of(m_data.begin(), m_data.end(), [](double v) { return std::isfinite(v); });
	}

	/// He-style uniform initialization, U(-sqrt(6 / fan_in), +sqrt(6 / fan_in)),
	/// zero biases.
	void init_he_uniform(std::uint64_t seed) {
		rng r = rng(seed).substream("subnet.init");
		std::fill(m_data.begin(), m_data.end(), 0.0);
		for (std::size_t k = 0; k < subnet_layers; ++k) {
			const double limit = std::sqrt(6.0 / static_cast<double>(m_widths[k]));
			auto w = weight(k);
			for (Eigen::Index i = 0; i < w.size(); ++i) {
				w.data()[i] = r.uniform(-limit, limit);
			}
		}
	}

	bool operator==(const subnet_params&) const = default;

private:
	std::array<std::size_t, subnet_layers + 1> m_widths{};
	std::array<std::size_t, subnet_layers> m_w_offset{};
	std::array<std::size_t, subnet_layers> m_b_offset{};
	bool m_final_activation = true;
	std::vector<double> m_data;
};

/// Activations of one forward pass over a batch (one column per sample).
struct forward_cache {
	std::array<matrix, subnet_layers> pre;  // W x + b
	std::array<matrix, subnet_layers> post; // after activation
	matrix input;

	const matrix& output() const { return post[subnet_layers - 1]; }
};

inline forward_cache forward_batch(const subnet_params& p, const matrix& x) {
	if (static_cast<std::size_t>(x.rows()) != p.input_dim()) {
		throw error(error_kind::data, "subnet input has " + std::to_string(x.rows()) + " rows, expected " +
		                                  std::to_string(p.input_dim()));
	}
	forward_cache c;
	c.input = x;
	const matrix* in = &c.input;
	for (std::size_t k = 0; k < subnet_layers; ++k) {
		c.pre[k] = p.weight(k) * (*in);
		c.pre[k].colwise() += p.bias(k);
		const bool relu = k + 1 < subnet_layers || p.final_activation();
		c.post[k] = relu ? matrix(c.pre[k].cwiseMax(0.0)) : c.pre[k];
		in = &c.post[k];
	}
	return c;
}

inline vector_d forward_subnet(const subnet_params& p, std::span<const double> x) {
	if (x.size() != p.input_dim()) {
		throw error(error_kind::data, "subnet input has length " + std::to_string(x.size()) + ", expected " +
		                                  std::to_string(p.input_dim()));
	}
	matrix in = Eigen::Map<const matrix>(x.data(), static_cast<Eigen::Index>(x.size()), 1);
	return forward_batch(p, in).output().col(0);
}

inline double euclidean(const vector_d& a, const vector_d& b) {
	double s = 0.0;
	for (Eigen::Index i = 0; i < a.size(); ++i) {
		const double d = a[i] - b[i];
		s += d * d;
	}
	return std::sqrt(s);
}

inline double pair_distance(const subnet_params& p, std::span<const double> a, std::span<const double> b) {
	return euclidean(forward_subnet(p, a), forward_subnet(p, b));
}

inline double contrastive_loss(double distance, int y, double margin) {
	if (distance < 0.0 || margin <= 0.0) {
		throw error(error_kind::data, "contrastive loss needs distance >= 0 and margin > 0");
	}
	if (y == 0) {
		return 0.5 * distance * distance;
	}
	const double gap = std::max(0.0, margin - distance);
	return 0.5 * gap * gap;
}

/// dL/dD.
inline double contrastive_loss_slope(double distance, int y, double margin) {
	return y == 0 ? distance : -std::max(0.0, margin - distance);
}

struct batch_result {
	double loss = 0.0;              // mean over the batch
	std::vector<double> gradient;   // same layout as subnet_params::flat()
};

namespace detail {

// Accumulates the parameter gradient of one branch given dL/d(output).
inline void backprop_branch(const subnet_params& p, const forward_cache& c, matrix grad_out, std::span<double> grad) {
	for (std::size_t k = subnet_layers; k-- > 0;) {
		const bool relu = k + 1 < subnet_layers || p.final_activation();
		if (relu) {
			grad_out = grad_out.cwiseProduct((c.pre[k].array() > 0.0).cast<double>().matrix());
		}
		const matrix& in = k == 0 ? c.input : c.post[k - 1];
		const auto w = p.weight(k);
		const std::size_t w_off = static_cast<std::size_t>(w.data() - p.flat().data());
		const std::size_t b_off = static_cast<std::size_t>(p.bias(k).data() - p.flat().data());
		Eigen::Map<matrix> gw(grad.data() + w_off, w.rows(), w.cols());
		Eigen::Map<vector_d> gb(grad.data() + b_off, w.rows());
		gw.noalias() += grad_out * in.transpose();
		gb.noalias() += grad_out.rowwise().sum();
		if (k > 0) {
			grad_out = w.transpose() * grad_out;
		}
	}
}

inline matrix stack(const std::vector<const std::vector<double>*>& columns, std::size_t rows) {
	matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(columns.size()));
	for (std::size_t j = 0; j < columns.size(); ++j) {
		if (columns[j]->size() != rows) {
			throw error(error_kind::data, "event vector has length " + std::to_string(columns[j]->size()) +
			                                  ", expected " + std::to_string(rows));
		}
		m.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const vector_d>(columns[j]->data(), static_cast<Eigen::Index>(rows));
	}
	return m;
}

} // namespace detail

/// Mean loss and its exact gradient over a batch given as stacked inputs
/// (one column per pair). The ReLU derivative at 0 is taken as 0, and the
/// distance gradient at D = 0 as 0.
inline batch_result batch_gradient(const subnet_params& p, const matrix& xa, const matrix& xb, std::span<const int> y,
                                   double margin) {
	const auto n = static_cast<std::size_t>(xa.cols());
	if (n == 0 || xb.cols() != xa.cols() || y.size() != n) {
		throw error(error_kind::data, "batch_gradient needs a non-empty batch of matching shapes");
	}
	const auto ca = forward_batch(p, xa);
	const auto cb = forward_batch(p, xb);
	const matrix diff = ca.output() - cb.output();

	batch_result r;
	r.gradient.assign(p.size(), 0.0);
	matrix grad_a(diff.rows(), diff.cols());
	const double inv_n = 1.0 / static_cast<double>(n);
	double loss = 0.0;
	for (std::size_t j = 0; j < n; ++j) {
		const auto col = static_cast<Eigen::Index>(j);
		const double d = diff.col(col).norm();
		loss += contrastive_loss(d, y[j], margin);
		if (y[j] == 0) {
			grad_a.col(col) = diff.col(col) * inv_n;
		} else if (d > 0.0 && d < margin) {
			grad_a.col(col) = diff.col(col) * (contrastive_loss_slope(d, 1, margin) / d * inv_n);
		} else {
			grad_a.col(col).setZero();
		}
	}
	r.loss = loss * inv_n;
	detail::backprop_branch(p, ca, grad_a, r.gradient);
	detail::backprop_branch(p, cb, -grad_a, r.gradient);
	return r;
}

inline batch_result batch_gradient(const subnet_params& p, std::span<const event_pair> batch, double margin) {
	std::vector<const std::vector<double>*> as, bs;
	std::vector<int> ys;
	for (const auto& pr : batch) {
		as.push_back(&pr.a.values);
		bs.push_back(&pr.b.values);
		ys.push_back(pr.y);
	}
	if (as.empty()) {
		throw error(error_kind::data, "batch_gradient needs a non-empty batch");
	}
	return batch_gradient(p, detail::stack(as, p.input_dim()), detail::stack(bs, p.input_dim()), ys, margin);
}

inline double batch_loss(const subnet_params& p, std::span<const event_pair> batch, double margin) {
	double loss = 0.0;
	for (const auto& pr : batch) {
		loss += contrastive_loss(pair_distance(p, pr.a.values, pr.b.values), pr.y, margin);
	}
	return loss / static_cast<double>(batch.size());
}

struct grad_check_result {
	double max_relative_error = 0.0;
	std::size_t checked = 0;
};

/// Compares batch_gradient against central differences of batch_loss.
/// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor);
/// the floor keeps entries that are zero on both sides from dividing by zero.
/// Differences within the rounding noise of the difference quotient,
/// 8 eps max(1, |loss|) / h, count as agreement (dead units give an exact
/// zero analytically but a few ulps numerically).
inline grad_check_result gradient_check(const subnet_params& p, std::span<const event_pair> batch, double margin,
                                        double h = 1e-5, std::size_t max_coords = 0, std::uint64_t seed = 0,
                                        double floor = 1e-6) {
	const auto analytic = batch_gradient(p, batch, margin).gradient;
	std::vector<std::size_t> coords(p.size());
	for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
	if (max_coords != 0 && max_coords < coords.size()) {
		rng r = rng(seed).substream("gradcheck.coords");
		r.shuffle(coords);
		coords.resize(max_coords);
		std::sort(coords.begin(), coords.end());
	}
	grad_check_result out;
	const double noise = 8.0 * std::numeric_limits<double>::epsilon() *
	                     std::max(1.0, std::abs(batch_loss(p, batch, margin))) / h;
	subnet_params probe = p;
	for (auto i : coords) {
		const double orig = probe.flat()[i];
		probe.flat()[i] = orig + h;
		const double up = batch_loss(probe, batch, margin);
		probe.flat()[i] = orig - h;
		const double down = batch_loss(probe, batch, margin);
		probe.flat()[i] = orig;
		const double numeric = (up - down) / (2.0 * h);
		const double diff = std::abs(analytic[i] - numeric);
		const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
		if (diff > noise) out.max_relative_error = std::max(out.max_relative_error, diff / denom);
		++out.checked;
	}
	return out;
}

/// Gradient check over `configs` small seeded networks (random widths,
/// margins, batch sizes, both final-layer variants), every coordinate.
inline grad_check_result gradient_check_sweep(std::uint64_t seed, std::size_t configs = 20, double h = 1e-5) {
	rng r = rng(seed).substream("gradcheck.sweep");
	grad_check_result worst;
	for (std::size_t c = 0; c < configs; ++c) {
		const std::size_t in = 2 + r.below(7);
		const std::size_t hidden = 2 + r.below(9);
		const double margin = r.uniform(0.5, 2.5);
		subnet_params p(in, hidden, c % 2 == 0);
		p.init_he_uniform(r.below(1u << 30));
		for (auto& v : p.flat()) v += 0.01 * r.normal();
		std::vector<event_pair> batch(1 + r.below(8));
		for (auto& pr : batch) {
			for (auto* v : {&pr.a.values, &pr.b.values}) {
				v->resize(in);
				for (auto& x : *v) x = r.normal();
			}
			pr.y = static_cast<int>(r.below(2));
			pr.kind = pr.y ? pair_kind::benign_adv : pair_kind::benign_benign;
		}
		const auto res = gradient_check(p, batch, margin, h);
		worst.max_relative_error = std::max(worst.max_relative_error, res.max_relative_error);
		worst.checked += res.checked;
	}
	return worst;
}

enum class optimizer_kind { sgd, adam };

struct train_config {
	double margin = 1.0;
	double learning_rate = 1e-3;
	std::size_t batch_size = 128;
	std::size_t epochs = 50;
	std::uint64_t seed = 0;
	optimizer_kind optimizer = optimizer_kind::adam;
	std::size_t hidden_dim = 128;
	bool final_activation = true;

	void validate() const {
		if (!(margin > 0.0)) throw error(error_kind::usage, "margin must be positive");
		if (!(learning_rate > 0.0)) throw error(error_kind::usage, "learning_rate must be positive");
		if (batch_size < 1) throw error(error_kind::usage, "batch_size must be at least 1");
		if (hidden_dim < 1) throw error(error_kind::usage, "hidden_dim must be at least 1");
	}

	static train_config from(const kv_config& kv, const std::string& prefix = "train.") {
		train_config c;
		c.margin = kv.get_double(prefix + "margin", c.margin);
		c.learning_rate = kv.get_double(prefix + "learning_rate", c.learning_rate);
		c.batch_size = static_cast<std::size_t>(kv.get_int(prefix + "batch_size", static_cast<std::int64_t>(c.batch_size)));
		c.epochs = static_cast<std::size_t>(kv.get_int(prefix + "epochs", static_cast<std::int64_t>(c.epochs)));
		c.seed = static_cast<std::uint64_t>(kv.get_int(prefix + "seed", static_cast<std::int64_t>(c.seed)));
		const auto opt = kv.get_string(prefix + "optimizer", "adam");
		if (opt == "adam") c.optimizer = optimizer_kind::adam;
		else if (opt == "sgd") c.optimizer = optimizer_kind::sgd;
		else throw error(error_kind::usage, "optimizer must be 'sgd' or 'adam'");
		c.hidden_dim = static_cast<std::size_t>(kv.get_int(prefix + "hidden_dim", static_cast<std::int64_t>(c.hidden_dim)));
		c.final_activation = kv.get_bool(prefix + "final_activation", c.final_activation);
		c.validate();
		return c;
	}

	void store(kv_config& kv, const std::string& prefix = "train.") const {
		kv.set(prefix + "margin", margin);
		kv.set(prefix + "learning_rate", learning_rate);
		kv.set(prefix + "batch_size", static_cast<std::int64_t>(batch_size));
		kv.set(prefix + "epochs", static_cast<std::int64_t>(epochs));
		kv.set(prefix + "seed", static_cast<std::int64_t>(seed));
		kv.set(prefix + "optimizer", std::string(optimizer == optimizer_kind::adam ? "adam" : "sgd"));
		kv.set(prefix + "hidden_dim", static_cast<std::int64_t>(hidden_dim));
		kv.set(prefix + "final_activation", final_activation);
	}
};

struct siamese_model {
	static constexpr int format_version = 1;

	subnet_params params;
	double margin = 1.0;
	std::optional<double> threshold; // set by calibration
	train_config meta;
	double final_loss = 0.0;

	double distance(std::span<const double> a, std::span<const double> b) const { return pair_distance(params, a, b); }

	void save(std::ostream& out) const {
		auto fmt = embedder_model::format_double;
		out << "provfsl-siamese\t" << format_version << "\n";
		out << "input_dim\t" << params.input_dim() << "\n";
		out << "hidden_dim\t" << params.hidden_dim() << "\n";
		out << "final_activation\t" << (params.final_activation() ? 1 : 0) << "\n";
		out << "margin\t" << fmt(margin) << "\n";
		out << "threshold\t" << (threshold ? fmt(*threshold) : std::string("none")) << "\n";
		out << "train\tlearning_rate=" << fmt(meta.learning_rate) << "\tbatch_size=" << meta.batch_size
		    << "\tepochs=" << meta.epochs << "\tseed=" << meta.seed
		    << "\toptimizer=" << (meta.optimizer == optimizer_kind::adam ? "adam" : "sgd")
		    << "\tfinal_loss=" << fmt(final_loss) << "\n";
		out << "params\t" << params.size() << "\n";
		const auto flat = params.flat();
		for (std::size_t i = 0; i < flat.size(); ++i) {
			out << fmt(flat[i]) << ((i + 1) % 16 == 0 || i + 1 == flat.size() ? '\n' : '\t');
		}
	}

	void save(const std::string& path) const {
		std::ofstream out(path, std::ios::binary);
		if (!out) {
			throw error(error_kind::io, "cannot write model: " + path);
		}
		save(out);
	}

	static siamese_model load(std::istream& in) {
		auto fail = [](const std::string& what) -> siamese_model {
			throw error(error_kind::data, "corrupt model file: " + what);
		};
		auto field = [&](const char* key) {
			std::string line;
			if (!std::getline(in, line)) {
				fail(std::string("missing ") + key);
			}
			const auto tab = line.find('\t');
			if (tab == std::string::npos || line.substr(0, tab) != key) {
				fail(std::string("expected ") + key);
			}
			return line.substr(tab + 1);
		};
		auto to_size = [&](const std::string& s) {
			std::size_t v = 0;
			auto res = std::from_chars(s.data(), s.data() + s.size(), v);
			if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
				fail("bad integer '" + s + "'");
			}
			return v;
		};
		const auto version = field("provfsl-siamese");
		if (version != std::to_string(format_version)) {
			throw error(error_kind::data, "model file version mismatch: " + version);
		}
		const auto input_dim = to_size(field("input_dim"));
		const auto hidden_dim = to_size(field("hidden_dim"));
		const bool final_act = field("final_activation") == "1";
		siamese_model m;
		m.params = subnet_params(input_dim, hidden_dim, final_act);
		m.margin = embedder_model::parse_double(field("margin"));
		const auto thr = field("threshold");
		if (thr != "none") {
			m.threshold = embedder_model::parse_double(thr);
		}
		std::stringstream train(field("train"));
		std::string kv;
		while (std::getline(train, kv, '\t')) {
			const auto eq = kv.find('=');
			if (eq == std::string::npos) fail("bad train field");
			const auto key = kv.substr(0, eq);
			const auto val = kv.substr(eq + 1);
			if (key == "learning_rate") m.meta.learning_rate = embedder_model::parse_double(val);
			else if (key == "batch_size") m.meta.batch_size = to_size(val);
			else if (key == "epochs") m.meta.epochs = to_size(val);
			else if (key == "seed") m.meta.seed = to_size(val);
			else if (key == "optimizer") m.meta.optimizer = val == "sgd" ? optimizer_kind::sgd : optimizer_kind::adam;
			else if (key == "final_loss") m.final_loss = embedder_model::parse_double(val);
		}
		m.meta.margin = m.margin;
		m.meta.hidden_dim = hidden_dim;
		m.meta.final_activation = final_act;
		if (to_size(field("params")) != m.params.size()) {
			fail("parameter count disagrees with layer shapes");
		}
		auto flat = m.params.flat();
		std::size_t i = 0;
		std::string tok;
		while (i < flat.size() && in >> tok) {
			flat[i++] = embedder_model::parse_double(tok);
		}
		if (i != flat.size()) {
			fail("truncated parameter block");
		}
		if (!m.params.finite()) {
			fail("non-finite parameters");
		}
		return m;
	}

	static siamese_model load(const std::string& path) {
		std::ifstream in(path, std::ios::binary);
		if (!in) {
			throw error(error_kind::io, "cannot open model: " + path);
		}
		return load(in);
	}
};

struct training_run {
	siamese_model model;
	std::vector<double> epoch_loss;
};

namespace detail {

class adam_state {
public:
	explicit adam_state(std::size_t n) : m_m(n, 0.0), m_v(n, 0.0) {}

	void step(std::span<double> params, std::span<const double> grad, double lr) {
		constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
		++m_t;
		const double c1 = 1.0 - std::pow(beta1, static_cast<double>(m_t));
		const double c2 = 1.0 - std::pow(beta2, static_cast<double>(m_t));
		for (std::size_t i = 0; i < params.size(); ++i) {
			m_m[i] = beta1 * m_m[i] + (1.0 - beta1) * grad[i];
			m_v[i] = beta2 * m_v[i] + (1.0 - beta2) * grad[i] * grad[i];
			params[i] -= lr * (m_m[i] / c1) / (std::sqrt(m_v[i] / c2) + eps);
		}
	}

private:
	std::vector<double> m_m, m_v;
	std::uint64_t m_t = 0;
};

} // namespace detail

/// Mini-batch training with a seeded shuffle per epoch. Returns the model
/// and the mean training loss of every epoch.
inline training_run train(const pair_dataset& d, const train_config& cfg) {
	cfg.validate();
	if (d.pairs.empty()) {
		throw error(error_kind::data, "cannot train on an empty pair dataset");
	}
	const std::size_t input_dim = d.pairs.front().a.values.size();
	training_run run;
	run.model.params = subnet_params(input_dim, cfg.hidden_dim, cfg.final_activation);
	run.model.params.init_he_uniform(cfg.seed);
	run.model.margin = cfg.margin;
	run.model.meta = cfg;

	std::vector<const std::vector<double>*> as, bs;
	std::vector<int> ys;
	for (const auto& p : d.pairs) {
		as.push_back(&p.a.values);
		bs.push_back(&p.b.values);
		ys.push_back(p.y);
	}
	const matrix xa = detail::stack(as, input_dim);
	const matrix xb = detail::stack(bs, input_dim);

	std::vector<std::size_t> order(d.pairs.size());
	for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
	rng shuffle_rng = rng(cfg.seed).substream("train.shuffle");
	detail::adam_state adam(run.model.params.size());

	for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
		shuffle_rng.shuffle(order);
		double loss_sum = 0.0;
		for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
			const std::size_t end = std::min(order.size(), start + cfg.batch_size);
			const auto cols = static_cast<Eigen::Index>(end - start);
			matrix ba(xa.rows(), cols), bb(xb.rows(), cols);
			std::vector<int> by(end - start);
			for (std::size_t j = start; j < end; ++j) {
				const auto c = static_cast<Eigen::Index>(j - start);
				ba.col(c) = xa.col(static_cast<Eigen::Index>(order[j]));
				bb.col(c) = xb.col(static_cast<Eigen::Index>(order[j]));
				by[j - start] = ys[order[j]];
			}
			const auto g = batch_gradient(run.model.params, ba, bb, by, cfg.margin);
			if (!std::isfinite(g.loss)) {
				throw error(error_kind::numeric, "training loss became NaN at epoch " + std::to_string(epoch) +
				                                     "; try a smaller learning rate");
			}
			loss_sum += g.loss * static_cast<double>(end - start);
			if (cfg.optimizer == optimizer_kind::adam) {
				adam.step(run.model.params.flat(), g.gradient, cfg.learning_rate);
			} else {
				auto flat = run.model.params.flat();
				for (std::size_t i = 0; i < flat.size(); ++i) {
					flat[i] -= cfg.learning_rate * g.gradient[i];
				}
			}
		}
		if (!run.model.params.finite()) {
			throw error(error_kind::numeric, "parameters diverged at epoch " + std::to_string(epoch) +
			                                     "; try a smaller learning rate");
		}
		run.epoch_loss.push_back(loss_sum / static_cast<double>(order.size()));
	}
	run.model.final_loss = run.epoch_loss.empty() ? 0.0 : run.epoch_loss.back();
	return run;
}

} // namespace provfsl
