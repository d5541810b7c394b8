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

// Unsupervised sentence embedder over unigram and bigram features.
//
// Training: for every sentence and every target word, the remaining words
// and the bigrams that do not touch the target are averaged into a context
// vector h, and the target is predicted from h with negative sampling:
//
//   loss = -log s(u_target . h) - sum_k log s(-u_neg_k . h)
//
// Negatives come from the unigram distribution raised to 0.75. A sentence is
// embedded as the mean of its in-vocabulary unigram and bigram vectors.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "provfsl/error.hpp"
#include "provfsl/ingest.hpp"
#include "provfsl/kvconfig.hpp"
#include "provfsl/rng.hpp"
#include "provfsl/semiotics.hpp"

namespace provfsl {

struct embedder_config {
	std::size_t dim = 50;
	std::size_t epochs = 20;
	double learning_rate = 0.05;
	std::size_t negatives = 5;
	std::size_t min_count = 1;
	std::size_t word_ngrams = 2; // 1 = unigrams only
	std::uint64_t seed = 1;

	static embedder_config from(const kv_config& kv, const std::string& prefix = "embed.") {
		embedder_config c;
		c.dim = static_cast<std::size_t>(kv.get_int(prefix + "dim", static_cast<std::int64_t>(c.dim)));
		c.epochs = static_cast<std::size_t>(kv.get_int(prefix + "epochs", static_cast<std::int64_t>(c.epochs)));
		c.learning_rate = kv.get_double(prefix + "learning_rate", c.learning_rate);
		c.negatives = static_cast<std::size_t>(kv.get_int(prefix + "negatives", static_cast<std::int64_t>(c.negatives)));
		c.min_count = static_cast<std::size_t>(kv.get_int(prefix + "min_count", static_cast<std::int64_t>(c.min_count)));
		c.word_ngrams = static_cast<std::size_t>(kv.get_int(prefix + "word_ngrams", static_cast<std::int64_t>(c.word_ngrams)));
		c.seed = static_cast<std::uint64_t>(kv.get_int(prefix + "seed", static_cast<std::int64_t>(c.seed)));
		if (c.dim == 0 || c.learning_rate <= 0.0 || c.word_ngrams < 1 || c.word_ngrams > 2) {
			throw error(error_kind::usage, "invalid embedder configuration");
		}
		return c;
	}
};

struct event_vector {
	std::vector<double> values;
	provfsl::label label = label::unknown;
	std::string scenario_id;

	bool operator==(const event_vector&) const = default;
};

class embedder_model {
public:
	static constexpr int format_version = 1;

	embedder_model() = default;
	embedder_model(std::size_t dim, std::vector<std::string> vocab, std::vector<double> vectors, embedder_config meta)
		: m_dim(dim), m_vocab(std::move(vocab)), m_vectors(std::move(vectors)), m_meta(meta) {
		if (m_dim == 0 || m_vectors.size() != m_vocab.size() * m_dim) {
			throw error(error_kind::data, "embedder shape mismatch");
		}
		for (std::size_t i = 0; i < m_vocab.size(); ++i) {
			if (!m_index.emplace(m_vocab[i], i).second) {
				throw error(error_kind::data, "duplicate vocabulary entry: " + m_vocab[i]);
			}
		}
		for (double v : m_vectors) {
			if (!std::isfinite(v)) {
				throw error(error_kind::numeric, "non-finite embedder weight");
			}
		}
	}

	std::size_t dim() const { return m_dim; }
	std::size_t vocab_size() const { return m_vocab.size(); }
	const std::vector<std::string>& vocab() const { return m_vocab; }
	const embedder_config& meta() const { return m_meta; }
	std::span<const double> row(std::size_t i) const { return {m_vectors.data() + i * m_dim, m_dim}; }

	std::optional<std::size_t> index_of(std::string_view feature) const {
		auto it = m_index.find(std::string(feature));
		if (it == m_index.end()) {
			return std::nullopt;
		}
		return it->second;
	}

	struct embedding {
		std::vector<double> values;
		bool oov = false; // no feature of the sentence was in vocabulary
	};

	embedding embed(std::string_view line) const {
		embedding out{std::vector<double>(m_dim, 0.0), false};
		const auto tokens = tokenize(line);
		std::size_t hits = 0;
		auto add = [&](const std::string& feature) {
			if (auto idx = index_of(feature)) {
				const auto r = row(*idx);
				for (std::size_t d = 0; d < m_dim; ++d) {
					out.values[d] += r[d];
				}
				++hits;
			}
		};
		for (const auto& t : tokens) {
			add(t);
		}
		for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
			add(tokens[i] + " " + tokens[i + 1]);
		}
		if (hits == 0) {
			out.oov = true;
			return out;
		}
		for (auto& v : out.values) {
			v /= static_cast<double>(hits);
		}
		return out;
	}

	void save(std::ostream& out) const {
		out << "provfsl-embedder\t" << format_version << "\n";
		out << "dim\t" << m_dim << "\n";
		out << "vocab\t" << m_vocab.size() << "\n";
		out << "meta\tepochs=" << m_meta.epochs << "\tlearning_rate=" << format_double(m_meta.learning_rate)
		    << "\tnegatives=" << m_meta.negatives << "\tmin_count=" << m_meta.min_count
		    << "\tword_ngrams=" << m_meta.word_ngrams << "\tseed=" << m_meta.seed << "\n";
		for (std::size_t i = 0; i < m_vocab.size(); ++i) {
			out << m_vocab[i];
			for (double v : row(i)) {
				out << '\t' << format_double(v);
			}
			out << '\n';
		}
	}

	static embedder_model load(std::istream& in) {
		std::string line;
		auto next = [&](const char* what) -> std::vector<std::string> {
			if (!std::getline(in, line)) {
				throw error(error_kind::data, std::string("corrupt embedder file: missing ") + what);
			}
			return split_tabs(line);
		};
		auto header = next("header");
		if (header.size() != 2 || header[0] != "provfsl-embedder") {
			throw error(error_kind::data, "corrupt embedder file: bad header");
		}
		if (header[1] != std::to_string(format_version)) {
			throw error(error_kind::data, "embedder file version mismatch: " + header[1]);
		}
		const auto dim = parse_count(next("dim"), "dim");
		const auto count = parse_count(next("vocab"), "vocab");
		embedder_config meta;
		auto m = next("meta");
		if (m.empty() || m[0] != "meta") {
			throw error(error_kind::data, "corrupt embedder file: bad meta line");
		}
		for (std::size_t i = 1; i < m.size(); ++i) {
			const auto eq = m[i].find('=');
			if (eq == std::string::npos) {
				throw error(error_kind::data, "corrupt embedder file: bad meta field");
			}
			const auto key = m[i].substr(0, eq);
			const auto value = m[i].substr(eq + 1);
			if (key == "learning_rate") {
				meta.learning_rate = parse_double(value);
			} else {
				const auto n = parse_u64(value);
				if (key == "epochs") meta.epochs = n;
				else if (key == "negatives") meta.negatives = n;
				else if (key == "min_count") meta.min_count = n;
				else if (key == "word_ngrams") meta.word_ngrams = n;
				else if (key == "seed") meta.seed = n;
			}
		}
		meta.dim = dim;
		std::vector<std::string> vocab;
		std::vector<double> vectors;
		vocab.reserve(count);
		vectors.reserve(count * dim);
		for (std::size_t i = 0; i < count; ++i) {
			auto fields = next("vocabulary row");
			if (fields.size() != dim + 1) {
				throw error(error_kind::data, "corrupt embedder file: row " + std::to_string(i) + " has wrong width");
			}
			vocab.push_back(fields[0]);
			for (std::size_t d = 0; d < dim; ++d) {
				vectors.push_back(parse_double(fields[d + 1]));
			}
		}
		return embedder_model(dim, std::move(vocab), std::move(vectors), meta);
	}

	void save(const std::string& path) const {
		std::ofstream out(path, std::ios::binary);
		if (!out) {
			throw error(error_kind::io, "cannot write embedder: " + path);
		}
		save(out);
	}

	static embedder_model load(const std::string& path) {
		std::ifstream in(path, std::ios::binary);
		if (!in) {
			throw error(error_kind::io, "cannot open embedder: " + path);
		}
		return load(in);
	}

	static std::string format_double(double v) {
		char buf[64];
		auto res = std::to_chars(buf, buf + sizeof buf, v);
		return std::string(buf, res.ptr);
	}

	static double parse_double(std::string_view s) {
		double v = 0.0;
		auto res = std::from_chars(s.data(), s.data() + s.size(), v);
		if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
			throw error(error_kind::data, "corrupt number '" + std::string(s) + "'");
		}
		return v;
	}

private:
	static std::vector<std::string> split_tabs(const std::string& line) {
		std::vector<std::string> out;
		std::size_t pos = 0;
		while (true) {
			const auto tab = line.find('\t', pos);
			out.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
			if (tab == std::string::npos) {
				break;
			}
			pos = tab + 1;
		}
		return out;
	}

	static std::uint64_t parse_u64(std::string_view s) {
		std::uint64_t v = 0;
		auto res = std::from_chars(s.data(), s.data() + s.size(), v);
		if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
			throw error(error_kind::data, "corrupt integer '" + std::string(s) + "'");
		}
		return v;
	}

	static std::size_t parse_count(const std::vector<std::string>& fields, const char* key) {
		if (fields.size() != 2 || fields[0] != key) {
			throw error(error_kind::data, std::string("corrupt embedder file: bad ") + key + " line");
		}
		return static_cast<std::size_t>(parse_u64(fields[1]));
	}

	std::size_t m_dim = 0;
	std::vector<std::string> m_vocab;
	std::vector<double> m_vectors; // row-major, vocab_size x dim
	std::unordered_map<std::string, std::size_t> m_index;
	embedder_config m_meta;
};

struct embedder_training {
	embedder_model model;
	std::vector<double> epoch_loss; // mean negative-sampling loss per target
};

namespace detail {

inline double sigmoid(double x) {
	if (x >= 0) {
		return 1.0 / (1.0 + std::exp(-x));
	}
	const double e = std::exp(x);
	return e / (1.0 + e);
}

} // namespace detail

inline embedder_training train_embedder(const std::vector<std::string>& corpus, const embedder_config& cfg) {
	if (corpus.empty()) {
		throw error(error_kind::data, "cannot train an embedder on an empty corpus");
	}
	if (cfg.dim == 0) {
		throw error(error_kind::usage, "embedding dimension must be positive");
	}

	std::vector<std::vector<std::string>> sentences;
	sentences.reserve(corpus.size());
	std::map<std::string, std::size_t> unigram_counts;
	std::map<std::string, std::size_t> bigram_counts;
	for (const auto& line : corpus) {
		auto tokens = tokenize(line);
		for (const auto& t : tokens) {
			++unigram_counts[t];
		}
		if (cfg.word_ngrams >= 2) {
			for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
				++bigram_counts[tokens[i] + " " + tokens[i + 1]];
			}
		}
		sentences.push_back(std::move(tokens));
	}

	// Vocabulary order: unigrams then bigrams, each by descending count and
	// then lexicographically, so the layout is independent of corpus order.
	auto ranked = [&](const std::map<std::string, std::size_t>& counts) {
		std::vector<std::pair<std::string, std::size_t>> items;
		for (const auto& [k, c] : counts) {
			if (c >= cfg.min_count) {
				items.emplace_back(k, c);
			}
		}
		std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
		return items;
	};
	const auto unigrams = ranked(unigram_counts);
	const auto bigrams = ranked(bigram_counts);
	if (unigrams.empty()) {
		throw error(error_kind::data, "embedder vocabulary is empty after min-count filtering");
	}

	std::vector<std::string> vocab;
	std::unordered_map<std::string, std::size_t> index;
	for (const auto& [k, c] : unigrams) {
		index.emplace(k, vocab.size());
		vocab.push_back(k);
	}
	const std::size_t n_unigrams = vocab.size();
	for (const auto& [k, c] : bigrams) {
		index.emplace(k, vocab.size());
		vocab.push_back(k);
	}

	const std::size_t dim = cfg.dim;
	rng init_rng = rng(cfg.seed).substream("embed.init");
	std::vector<double> input(vocab.size() * dim);
	for (auto& v : input) {
		v = init_rng.uniform(-1.0, 1.0) / static_cast<double>(dim);
	}
	std::vector<double> output(n_unigrams * dim, 0.0);

	// Smoothed unigram distribution for negatives.
	std::vector<double> cumulative(n_unigrams);
	double total = 0.0;
	for (std::size_t i = 0; i < n_unigrams; ++i) {
		total += std::pow(static_cast<double>(unigrams[i].second), 0.75);
		cumulative[i] = total;
	}

	struct example {
		std::size_t sentence;
		std::size_t target_pos;
	};
	std::vector<std::vector<std::size_t>> unigram_ids(sentences.size());
	std::vector<std::vector<std::ptrdiff_t>> bigram_ids(sentences.size());
	std::vector<example> examples;
	for (std::size_t s = 0; s < sentences.size(); ++s) {
		const auto& toks = sentences[s];
		for (const auto& t : toks) {
			auto it = index.find(t);
			unigram_ids[s].push_back(it == index.end() ? vocab.size() : it->second);
		}
		for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
			auto it = cfg.word_ngrams >= 2 ? index.find(toks[i] + " " + toks[i + 1]) : index.end();
			bigram_ids[s].push_back(it == index.end() ? -1 : static_cast<std::ptrdiff_t>(it->second));
		}
		if (toks.size() < 2) {
			continue;
		}
		for (std::size_t i = 0; i < toks.size(); ++i) {
			if (unigram_ids[s][i] < n_unigrams) {
				examples.push_back({s, i});
			}
		}
	}

	embedder_training result;
	rng order_rng = rng(cfg.seed).substream("embed.order");
	rng neg_rng = rng(cfg.seed).substream("embed.negatives");
	const double total_steps = static_cast<double>(std::max<std::size_t>(1, cfg.epochs * examples.size()));
	std::size_t step = 0;
	std::vector<double> h(dim);
	std::vector<double> grad_h(dim);
	std::vector<std::size_t> context;

	auto sample_negative = [&]() {
		const double u = neg_rng.uniform() * total;
		const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
		return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative.begin(), static_cast<std::ptrdiff_t>(n_unigrams) - 1));
	};

	// Fills `context` and the averaged hidden vector `h`; false if empty.
	auto load_context = [&](const example& ex) {
		context.clear();
		const auto& uids = unigram_ids[ex.sentence];
		for (std::size_t j = 0; j < uids.size(); ++j) {
			if (j != ex.target_pos && uids[j] < vocab.size()) {
				context.push_back(uids[j]);
			}
		}
		const auto& bids = bigram_ids[ex.sentence];
		for (std::size_t j = 0; j < bids.size(); ++j) {
			if (j != ex.target_pos && j + 1 != ex.target_pos && bids[j] >= 0) {
				context.push_back(static_cast<std::size_t>(bids[j]));
			}
		}
		if (context.empty()) {
			return false;
		}
		std::fill(h.begin(), h.end(), 0.0);
		for (auto c : context) {
			for (std::size_t d = 0; d < dim; ++d) {
				h[d] += input[c * dim + d];
			}
		}
		const double inv = 1.0 / static_cast<double>(context.size());
		for (auto& v : h) {
			v *= inv;
		}
		return true;
	};
	auto score_of = [&](std::size_t out_id) {
		const double* u = output.data() + out_id * dim;
		double score = 0.0;
		for (std::size_t d = 0; d < dim; ++d) {
			score += u[d] * h[d];
		}
		return score;
	};
	auto pair_loss = [](double score, bool positive) {
		const double p = detail::sigmoid(score);
		return positive ? -std::log(std::max(p, 1e-300)) : -std::log(std::max(1.0 - p, 1e-300));
	};

	// The reported per-epoch loss is the expected negative-sampling objective
	// over all examples (negatives integrated against the smoothed unigram
	// distribution), so epochs are comparable.
	std::vector<double> neg_prob(n_unigrams);
	for (std::size_t i = 0; i < n_unigrams; ++i) {
		neg_prob[i] = std::pow(static_cast<double>(unigrams[i].second), 0.75) / total;
	}
	// Repeated sentences share contexts; each distinct one is scored once.
	std::vector<std::pair<example, double>> eval_examples;
	{
		std::map<std::string_view, std::size_t> first_seen;
		std::vector<double> weight(corpus.size(), 0.0);
		std::vector<std::size_t> owner(corpus.size());
		for (std::size_t s = 0; s < corpus.size(); ++s) {
			owner[s] = first_seen.emplace(corpus[s], s).first->second;
			weight[owner[s]] += 1.0;
		}
		for (const auto& ex : examples) {
			if (owner[ex.sentence] == ex.sentence) {
				eval_examples.push_back({ex, weight[ex.sentence]});
			}
		}
	}
	auto objective = [&]() {
		double sum = 0.0;
		for (const auto& [ex, w] : eval_examples) {
			if (!load_context(ex)) {
				continue;
			}
			const std::size_t target = unigram_ids[ex.sentence][ex.target_pos];
			double negative = 0.0;
			for (std::size_t w = 0; w < n_unigrams; ++w) {
				if (w != target) {
					negative += neg_prob[w] * pair_loss(score_of(w), false);
				}
			}
			sum += w * (pair_loss(score_of(target), true) + static_cast<double>(cfg.negatives) * negative);
		}
		return examples.empty() ? 0.0 : sum / static_cast<double>(examples.size());
	};

	for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
		order_rng.shuffle(examples);
		for (const auto& ex : examples) {
			const double lr = cfg.learning_rate * (1.0 - static_cast<double>(step) / total_steps);
			++step;
			if (!load_context(ex)) {
				continue;
			}
			std::fill(grad_h.begin(), grad_h.end(), 0.0);

			auto update = [&](std::size_t out_id, double target) {
				double* u = output.data() + out_id * dim;
				const double g = lr * (target - detail::sigmoid(score_of(out_id)));
				for (std::size_t d = 0; d < dim; ++d) {
					grad_h[d] += g * u[d];
					u[d] += g * h[d];
				}
			};

			const std::size_t target = unigram_ids[ex.sentence][ex.target_pos];
			update(target, 1.0);
			for (std::size_t k = 0; k < cfg.negatives; ++k) {
				std::size_t neg = sample_negative();
				if (neg == target) {
					continue;
				}
				update(neg, 0.0);
			}
			const double inv = 1.0 / static_cast<double>(context.size());
			for (auto c : context) {
				for (std::size_t d = 0; d < dim; ++d) {
					input[c * dim + d] += grad_h[d] * inv;
				}
			}
		}
		const double mean = objective();
		if (!std::isfinite(mean)) {
			throw error(error_kind::numeric, "embedder loss diverged; lower the learning rate");
		}
		result.epoch_loss.push_back(mean);
	}

	embedder_config meta = cfg;
	result.model = embedder_model(dim, std::move(vocab), std::move(input), meta);
	return result;
}

struct embed_stats {
	std::size_t sentences = 0;
	std::size_t oov = 0;
};

inline event_vector embed_sentence(const embedder_model& m, const corpus_entry& c, embed_stats* stats = nullptr) {
	auto e = m.embed(c.sentence);
	if (stats) {
		++stats->sentences;
		stats->oov += e.oov ? 1 : 0;
	}
	return {std::move(e.values), c.label, c.scenario_id};
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
	double dot = 0.0, na = 0.0, nb = 0.0;
	for (std::size_t i = 0; i < a.size(); ++i) {
		dot += a[i] * b[i];
		na += a[i] * a[i];
		nb += b[i] * b[i];
	}
	if (na == 0.0 || nb == 0.0) {
		return 0.0;
	}
	return dot / std::sqrt(na * nb);
}

/// Vector file line: "label<TAB>scenario_id<TAB>v1,v2,...".
inline std::string format_vector_line(const event_vector& v) {
	std::string out = std::string(to_string(v.label)) + "\t" + v.scenario_id + "\t";
	for (std::size_t i = 0; i < v.values.size(); ++i) {
		if (i) {
			out += ',';
		}
		out += embedder_model::format_double(v.values[i]);
	}
	return out;
}

inline std::vector<double> parse_vector_values(std::string_view s) {
	std::vector<double> out;
	std::size_t pos = 0;
	while (pos <= s.size()) {
		const auto comma = s.find(',', pos);
		const auto piece = s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
		out.push_back(embedder_model::parse_double(piece));
		if (comma == std::string_view::npos) {
			break;
		}
		pos = comma + 1;
	}
	return out;
}

inline std::vector<event_vector> read_vectors(std::istream& in) {
	std::vector<event_vector> out;
	std::string line;
	std::size_t lineno = 0;
	while (std::getline(in, line)) {
		++lineno;
		if (line.empty()) {
			continue;
		}
		const auto t1 = line.find('\t');
		const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
		if (t2 == std::string::npos) {
			throw parse_error(lineno, "", "vector line needs label, scenario_id and values");
		}
		const auto lab = parse_label(std::string_view(line).substr(0, t1));
		if (!lab) {
			throw parse_error(lineno, "label", "unknown label");
		}
		event_vector v;
		v.label = *lab;
		v.scenario_id = line.substr(t1 + 1, t2 - t1 - 1);
		try {
			v.values = parse_vector_values(std::string_view(line).substr(t2 + 1));
		} catch (const error& e) {
			throw parse_error(lineno, "values", e.what());
		}
		if (!out.empty() && out.front().values.size() != v.values.size()) {
			throw parse_error(lineno, "values", "inconsistent vector length");
		}
		out.push_back(std::move(v));
	}
	return out;
}

inline std::vector<event_vector> load_vectors(const std::string& path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw error(error_kind::io, "cannot open vectors: " + path);
	}
	return read_vectors(in);
}

} // namespace provfsl
