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

// Adversarial-set refinement and similar/dissimilar pair construction.
//
// Label convention: y = 0 for similar pairs (both benign or both
// adversarial), y = 1 for dissimilar pairs (one of each).

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "provfsl/embed.hpp"
#include "provfsl/error.hpp"
#include "provfsl/rng.hpp"

namespace provfsl {

struct refinement {
	std::vector<std::string> refined; // in first-occurrence order
	std::size_t adversarial_distinct = 0;
	std::size_t overlap = 0;
};

/// Distinct adversarial sentences that never occur among the benign ones.
template <typename BenignRange, typename AdvRange>
refinement refine_adversarial_counted(const BenignRange& benign, const AdvRange& adversarial) {
	refinement out;
	const std::unordered_set<std::string> benign_set(std::begin(benign), std::end(benign));
	std::unordered_set<std::string> seen;
	for (const auto& s : adversarial) {
		if (!seen.insert(std::string(s)).second) {
			continue;
		}
		++out.adversarial_distinct;
		if (benign_set.count(std::string(s))) {
			++out.overlap;
		} else {
			out.refined.emplace_back(s);
		}
	}
	if (out.adversarial_distinct == 0) {
		throw error(error_kind::data, "no adversarial events");
	}
	return out;
}

template <typename BenignRange, typename AdvRange>
std::vector<std::string> refine_adversarial(const BenignRange& benign, const AdvRange& adversarial) {
	return refine_adversarial_counted(benign, adversarial).refined;
}

enum class pair_kind { benign_benign, adv_adv, benign_adv };

inline std::string_view to_string(pair_kind k) {
	switch (k) {
	case pair_kind::benign_benign: return "benign-benign";
	case pair_kind::adv_adv: return "adv-adv";
	case pair_kind::benign_adv: return "benign-adv";
	}
	return "benign-adv";
}

inline std::optional<pair_kind> parse_pair_kind(std::string_view s) {
	if (s == "benign-benign") return pair_kind::benign_benign;
	if (s == "adv-adv") return pair_kind::adv_adv;
	if (s == "benign-adv") return pair_kind::benign_adv;
	return std::nullopt;
}

constexpr int label_of(pair_kind k) { return k == pair_kind::benign_adv ? 1 : 0; }

struct event_pair {
	event_vector a;
	event_vector b;
	int y = 0;
	pair_kind kind = pair_kind::benign_benign;
	std::string source; // dataset the pair was drawn from

	bool operator==(const event_pair&) const = default;
};

struct pair_counts {
	std::size_t benign_benign = 0;
	std::size_t adv_adv = 0;
	std::size_t benign_adv = 0;

	std::size_t similar() const { return benign_benign + adv_adv; }
	std::size_t dissimilar() const { return benign_adv; }
};

struct pair_dataset {
	std::vector<event_pair> pairs;
	std::string source_tag;
	std::uint64_t seed = 0;

	pair_counts counts() const {
		pair_counts c;
		for (const auto& p : pairs) {
			switch (p.kind) {
			case pair_kind::benign_benign: ++c.benign_benign; break;
			case pair_kind::adv_adv: ++c.adv_adv; break;
			case pair_kind::benign_adv: ++c.benign_adv; break;
			}
		}
		return c;
	}

	/// Similar and dissimilar halves equal, and the two similar kinds equal,
	/// each within `slack`.
	bool balanced(std::size_t slack = 0) const {
		const auto c = counts();
		auto close = [slack](std::size_t x, std::size_t y) { return (x > y ? x - y : y - x) <= slack; };
		return close(c.similar(), c.dissimilar()) && close(c.benign_benign, c.adv_adv) && consistent();
	}

	bool consistent() const {
		return std::all_of(pairs.begin(), pairs.end(), [](const event_pair& p) { return p.y == label_of(p.kind); });
	}
};

namespace detail {

// n codes from [0, space): distinct while the space lasts, uniform with
// replacement afterwards. draw() yields one uniformly random valid code;
// enumerate() lists every valid code.
template <typename Draw, typename Enumerate>
std::vector<std::uint64_t> sample_codes(std::size_t n, std::uint64_t space, rng& r, Draw draw, Enumerate enumerate) {
	std::vector<std::uint64_t> out;
	out.reserve(n);
	if (n == 0 || space == 0) {
		return out;
	}
	if (n >= space || 2 * static_cast<std::uint64_t>(n) > space) {
		std::vector<std::uint64_t> all = enumerate();
		r.shuffle(all);
		const std::size_t take = std::min<std::size_t>(n, all.size());
		out.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take));
	} else {
		std::unordered_set<std::uint64_t> used;
		while (out.size() < n) {
			const auto code = draw();
			if (used.insert(code).second) {
				out.push_back(code);
			}
		}
	}
	while (out.size() < n) {
		out.push_back(draw());
	}
	return out;
}

} // namespace detail

struct index_pair {
	pair_kind kind;
	std::size_t first;  // into the benign set unless kind == adv_adv
	std::size_t second; // into the adversarial set unless kind == benign_benign
};

/// Index-level pair plan over sets of sizes n_benign and n_adv. Dissimilar
/// pairs are n_pairs/2; the similar half is split between benign-benign
/// (rounded up) and adv-adv. Similar pairs use two distinct members unless
/// `allow_identical` is set.
inline std::vector<index_pair> plan_pairs(std::size_t n_benign, std::size_t n_adv, std::size_t n_pairs,
                                          std::uint64_t seed, bool allow_identical = false) {
	if (n_benign == 0 || n_adv == 0) {
		throw error(error_kind::data, "pair construction needs non-empty benign and adversarial sets");
	}
	if (n_pairs % 2 != 0) {
		throw error(error_kind::usage, "pair count must be even");
	}
	const std::size_t n_dissimilar = n_pairs / 2;
	const std::size_t n_similar = n_pairs - n_dissimilar;
	const std::size_t n_bb = (n_similar + 1) / 2;
	const std::size_t n_aa = n_similar - n_bb;
	if (!allow_identical && ((n_bb > 0 && n_benign < 2) || (n_aa > 0 && n_adv < 2))) {
		throw error(error_kind::data, "a set of size 1 cannot form a similar pair of distinct members");
	}

	rng root(seed);
	std::vector<index_pair> out;
	out.reserve(n_pairs);

	{
		rng r = root.substream("pairs.dissimilar");
		const std::uint64_t space = static_cast<std::uint64_t>(n_benign) * n_adv;
		auto codes = detail::sample_codes(
			n_dissimilar, space, r, [&] { return r.below(space); },
			[&] {
				std::vector<std::uint64_t> all(space);
				for (std::uint64_t i = 0; i < space; ++i) all[i] = i;
				return all;
			});
		for (auto c : codes) {
			out.push_back({pair_kind::benign_adv, static_cast<std::size_t>(c / n_adv), static_cast<std::size_t>(c % n_adv)});
		}
	}

	auto similar = [&](pair_kind kind, std::size_t set_size, std::size_t count, std::string_view stream) {
		rng r = root.substream(stream);
		const std::uint64_t n = set_size;
		const bool distinct = n >= 2;
		// Unordered pairs {i, j}, i < j (or i <= j when identical members
		// are the only option), encoded as i * n + j.
		const std::uint64_t space = distinct ? n * (n - 1) / 2 : 1;
		auto draw = [&]() -> std::uint64_t {
			if (!distinct) {
				return 0;
			}
			std::uint64_t i = r.below(n);
			std::uint64_t j = r.below(n - 1);
			if (j >= i) ++j;
			if (i > j) std::swap(i, j);
			return i * n + j;
		};
		auto enumerate = [&] {
			std::vector<std::uint64_t> all;
			if (!distinct) {
				all.push_back(0);
				return all;
			}
			all.reserve(space);
			for (std::uint64_t i = 0; i < n; ++i)
				for (std::uint64_t j = i + 1; j < n; ++j) all.push_back(i * n + j);
			return all;
		};
		for (auto c : detail::sample_codes(count, space, r, draw, enumerate)) {
			const std::size_t i = static_cast<std::size_t>(c / n);
			const std::size_t j = static_cast<std::size_t>(c % n);
			out.push_back({kind, i, j});
		}
	};
	similar(pair_kind::benign_benign, n_benign, n_bb, "pairs.benign");
	similar(pair_kind::adv_adv, n_adv, n_aa, "pairs.adversarial");

	rng order = root.substream("pairs.order");
	order.shuffle(out);
	return out;
}

inline pair_dataset build_pairs(const std::vector<event_vector>& benign, const std::vector<event_vector>& adversarial,
                                std::size_t n_pairs, std::uint64_t seed, std::string source_tag = {},
                                bool allow_identical = false) {
	pair_dataset d;
	d.source_tag = std::move(source_tag);
	d.seed = seed;
	for (const auto& ip : plan_pairs(benign.size(), adversarial.size(), n_pairs, seed, allow_identical)) {
		event_pair p;
		p.kind = ip.kind;
		p.y = label_of(ip.kind);
		p.source = d.source_tag;
		switch (ip.kind) {
		case pair_kind::benign_benign:
			p.a = benign[ip.first];
			p.b = benign[ip.second];
			break;
		case pair_kind::adv_adv:
			p.a = adversarial[ip.first];
			p.b = adversarial[ip.second];
			break;
		case pair_kind::benign_adv:
			p.a = benign[ip.first];
			p.b = adversarial[ip.second];
			break;
		}
		d.pairs.push_back(std::move(p));
	}
	return d;
}

/// Stratified split: every pair kind is divided in the same proportion.
inline std::pair<pair_dataset, pair_dataset> split(const pair_dataset& d, double train_fraction, std::uint64_t seed) {
	if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
		throw error(error_kind::usage, "train fraction must lie in (0, 1)");
	}
	pair_dataset train{{}, d.source_tag, seed};
	pair_dataset val{{}, d.source_tag, seed};
	rng root(seed);
	for (auto kind : {pair_kind::benign_benign, pair_kind::adv_adv, pair_kind::benign_adv}) {
		std::vector<std::size_t> idx;
		for (std::size_t i = 0; i < d.pairs.size(); ++i) {
			if (d.pairs[i].kind == kind) {
				idx.push_back(i);
			}
		}
		rng r = root.substream(std::string("split.") + std::string(to_string(kind)));
		r.shuffle(idx);
		const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
		for (std::size_t k = 0; k < idx.size(); ++k) {
			(k < n_train ? train : val).pairs.push_back(d.pairs[idx[k]]);
		}
	}
	auto has_both = [](const pair_dataset& x) {
		const auto c = x.counts();
		return c.similar() > 0 && c.dissimilar() > 0;
	};
	if (!has_both(train) || !has_both(val)) {
		throw error(error_kind::data, "dataset too small to stratify");
	}
	rng order = root.substream("split.order");
	order.shuffle(train.pairs);
	order.shuffle(val.pairs);
	return {std::move(train), std::move(val)};
}

/// Concatenation in argument order; the result is tagged with the joined
/// source tags.
inline pair_dataset merge(const std::vector<const pair_dataset*>& parts, std::uint64_t seed) {
	pair_dataset out;
	out.seed = seed;
	for (const auto* p : parts) {
		if (!out.source_tag.empty()) {
			out.source_tag += "+";
		}
		out.source_tag += p->source_tag;
		out.pairs.insert(out.pairs.end(), p->pairs.begin(), p->pairs.end());
	}
	return out;
}

// Pair file: header line, then "y<TAB>pair_kind<TAB>a1,a2,..<TAB>b1,b2,..".
// The seed and source tag live in a JSON sidecar next to it (path + ".json").

inline void write_pairs(std::ostream& out, const pair_dataset& d) {
	out << "y\tpair_kind\tvector_a\tvector_b\n";
	auto join = [](const std::vector<double>& v) {
		std::string s;
		for (std::size_t i = 0; i < v.size(); ++i) {
			if (i) s += ',';
			s += embedder_model::format_double(v[i]);
		}
		return s;
	};
	for (const auto& p : d.pairs) {
		out << p.y << '\t' << to_string(p.kind) << '\t' << join(p.a.values) << '\t' << join(p.b.values) << '\n';
	}
}

inline nlohmann::ordered_json pair_sidecar(const pair_dataset& d) {
	nlohmann::ordered_json j;
	j["source_tag"] = d.source_tag;
	j["seed"] = d.seed;
	j["pairs"] = d.pairs.size();
	return j;
}

inline pair_dataset read_pairs(std::istream& in) {
	pair_dataset d;
	std::string line;
	std::size_t lineno = 0;
	while (std::getline(in, line)) {
		++lineno;
		if (line.empty() || (lineno == 1 && line.starts_with("y\t"))) {
			continue;
		}
		std::vector<std::string_view> cols;
		std::string_view rest(line);
		while (true) {
			const auto tab = rest.find('\t');
			cols.push_back(rest.substr(0, tab));
			if (tab == std::string_view::npos) break;
			rest.remove_prefix(tab + 1);
		}
		if (cols.size() != 4) {
			throw parse_error(lineno, "", "pair line needs 4 columns");
		}
		event_pair p;
		if (cols[0] != "0" && cols[0] != "1") {
			throw parse_error(lineno, "y", "y must be 0 or 1");
		}
		p.y = cols[0] == "1" ? 1 : 0;
		const auto kind = parse_pair_kind(cols[1]);
		if (!kind) {
			throw parse_error(lineno, "pair_kind", "unknown pair kind");
		}
		p.kind = *kind;
		if (p.y != label_of(p.kind)) {
			throw parse_error(lineno, "y", "label disagrees with pair kind");
		}
		try {
			p.a.values = parse_vector_values(cols[2]);
			p.b.values = parse_vector_values(cols[3]);
		} catch (const error& e) {
			throw parse_error(lineno, "vector", e.what());
		}
		p.a.label = p.kind == pair_kind::adv_adv ? label::adversarial : label::benign;
		p.b.label = p.kind == pair_kind::benign_benign ? label::benign : label::adversarial;
		d.pairs.push_back(std::move(p));
	}
	return d;
}

inline void save_pairs(const std::string& path, const pair_dataset& d) {
	std::ofstream out(path, std::ios::binary);
	std::ofstream side(path + ".json", std::ios::binary);
	if (!out || !side) {
		throw error(error_kind::io, "cannot write pairs: " + path);
	}
	write_pairs(out, d);
	side << pair_sidecar(d).dump(2) << '\n';
}

inline pair_dataset load_pairs(const std::string& path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw error(error_kind::io, "cannot open pairs: " + path);
	}
	pair_dataset d = read_pairs(in);
	std::ifstream side(path + ".json", std::ios::binary);
	if (side) {
		try {
			const auto j = nlohmann::json::parse(side);
			d.source_tag = j.value("source_tag", std::string{});
			d.seed = j.value("seed", std::uint64_t{0});
		} catch (const nlohmann::json::exception& e) {
			throw error(error_kind::data, "corrupt pair sidecar: " + std::string(e.what()));
		}
	}
	for (auto& p : d.pairs) {
		p.source = d.source_tag;
	}
	return d;
}

} // namespace provfsl
