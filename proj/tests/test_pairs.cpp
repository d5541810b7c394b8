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

#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include "provfsl/pairs.hpp"

using namespace provfsl;

namespace {

std::vector<event_vector> vectors(std::size_t n, label l, double offset) {
	std::vector<event_vector> out;
	for (std::size_t i = 0; i < n; ++i) {
		out.push_back({{offset + static_cast<double>(i), -static_cast<double>(i) * 0.5}, l, "C00"});
	}
	return out;
}

struct table_row {
	const char* id;
	std::size_t adversarial;
	std::size_t overlap;
	std::size_t refined;
	std::size_t benign;
};

// Distinct adversarial, overlapping, refined and benign counts per category.
const table_row table_rows[] = {
	{"C01-C05", 4516, 2629, 1887, 4341}, {"C06", 438, 178, 260, 272},   {"C07", 237, 190, 47, 324},
	{"C08", 2527, 1202, 1325, 1620},     {"C09", 477, 309, 168, 336},   {"C10", 399, 324, 75, 339},
	{"C11", 5041, 2958, 2083, 3678},
};

} // namespace

TEST(refine, table_arithmetic) {
	for (const auto& row : table_rows) {
		ASSERT_GE(row.benign, row.overlap) << row.id;
		std::vector<std::string> benign;
		for (std::size_t i = 0; i < row.benign; ++i) {
			benign.push_back("b" + std::to_string(i));
		}
		std::vector<std::string> adv;
		for (std::size_t i = 0; i < row.adversarial; ++i) {
			// The first `overlap` sentences coincide with benign ones; every
			// sentence appears twice to exercise distinct counting.
			const auto s = i < row.overlap ? "b" + std::to_string(i) : "a" + std::to_string(i);
			adv.push_back(s);
			adv.push_back(s);
		}
		const auto r = refine_adversarial_counted(benign, adv);
		EXPECT_EQ(r.adversarial_distinct, row.adversarial) << row.id;
		EXPECT_EQ(r.overlap, row.overlap) << row.id;
		EXPECT_EQ(r.refined.size(), row.refined) << row.id;
		EXPECT_EQ(row.adversarial - row.overlap, row.refined) << row.id;
	}
}

TEST(refine, properties) {
	const std::vector<std::string> benign{"ps open <TMP>", "httpd open /etc/hosts", "cron execve sh"};
	const std::vector<std::string> adv{"httpd execve sh", "cron execve sh", "sh connect 1.2.3.4:4444",
	                                   "httpd execve sh"};
	const auto once = refine_adversarial(benign, adv);
	EXPECT_EQ(once, (std::vector<std::string>{"httpd execve sh", "sh connect 1.2.3.4:4444"}));
	EXPECT_EQ(refine_adversarial(benign, once), once);
	for (const auto& s : once) {
		EXPECT_EQ(std::count(benign.begin(), benign.end(), s), 0);
	}
	const std::vector<std::string> disjoint{"x y z"};
	EXPECT_EQ(refine_adversarial(benign, disjoint), disjoint);
	try {
		refine_adversarial(benign, std::vector<std::string>{});
		FAIL();
	} catch (const error& e) {
		EXPECT_EQ(std::string(e.what()), "no adversarial events");
	}
}

TEST(build_pairs, dataset_sizes) {
	struct sized {
		const char* id;
		std::size_t benign, refined, n_pairs;
	};
	const sized sets[] = {{"D01-D05", 4341, 1887, 3380}, {"D06", 272, 260, 516}, {"D07", 324, 47, 92},
	                      {"D08", 1620, 1325, 2648},     {"D09", 336, 168, 332}, {"D10", 339, 75, 148},
	                      {"D11", 3678, 2083, 4164}};
	for (const auto& s : sets) {
		const auto plan = plan_pairs(s.benign, s.refined, s.n_pairs, 3);
		ASSERT_EQ(plan.size(), s.n_pairs) << s.id;
		std::size_t bb = 0, aa = 0, ba = 0;
		std::set<std::tuple<int, std::size_t, std::size_t>> unique;
		for (const auto& p : plan) {
			bb += p.kind == pair_kind::benign_benign;
			aa += p.kind == pair_kind::adv_adv;
			ba += p.kind == pair_kind::benign_adv;
			if (p.kind != pair_kind::benign_adv) {
				EXPECT_NE(p.first, p.second) << s.id;
			}
			unique.emplace(static_cast<int>(p.kind), p.first, p.second);
		}
		EXPECT_EQ(ba, s.n_pairs / 2) << s.id;
		EXPECT_EQ(bb + aa, s.n_pairs / 2) << s.id;
		EXPECT_LE(bb > aa ? bb - aa : aa - bb, 1u) << s.id;
		// Every category has room for distinct pairs at these sizes.
		EXPECT_EQ(unique.size(), s.n_pairs) << s.id;
	}
	const auto d07 = build_pairs(vectors(324, label::benign, 0), vectors(47, label::adversarial, 1000), 92, 1, "D07");
	EXPECT_EQ(d07.counts().benign_benign, 23u);
	EXPECT_EQ(d07.counts().adv_adv, 23u);
	EXPECT_EQ(d07.counts().benign_adv, 46u);
	EXPECT_TRUE(d07.balanced());
}

TEST(build_pairs, labels_follow_kinds) {
	const auto d = build_pairs(vectors(30, label::benign, 0), vectors(20, label::adversarial, 1000), 200, 9, "T");
	EXPECT_TRUE(d.consistent());
	for (const auto& p : d.pairs) {
		EXPECT_EQ(p.y, label_of(p.kind));
		if (p.y == 1) {
			EXPECT_NE(p.a.label, p.b.label);
		} else {
			EXPECT_EQ(p.a.label, p.b.label);
		}
		EXPECT_EQ(p.source, "T");
	}
}

TEST(build_pairs, minimal_and_error_cases) {
	const auto u = vectors(1, label::benign, 0);
	const auto v = vectors(1, label::adversarial, 5);
	EXPECT_THROW(build_pairs(u, v, 2, 1), error);
	const auto d = build_pairs(u, v, 2, 1, "", true);
	ASSERT_EQ(d.pairs.size(), 2u);
	EXPECT_EQ(d.counts().dissimilar(), 1u);
	EXPECT_EQ(d.counts().similar(), 1u);
	for (const auto& p : d.pairs) {
		if (p.y == 0) {
			EXPECT_EQ(p.a, p.b);
		}
	}
	EXPECT_THROW(build_pairs(u, {}, 2, 1), error);
	EXPECT_THROW(build_pairs(vectors(3, label::benign, 0), vectors(3, label::adversarial, 5), 7, 1), error);
}

TEST(build_pairs, exhausts_space_then_repeats) {
	// 2 x 2 dissimilar combinations, 10 requested: all four appear.
	const auto plan = plan_pairs(2, 2, 20, 4);
	std::set<std::pair<std::size_t, std::size_t>> seen;
	for (const auto& p : plan) {
		if (p.kind == pair_kind::benign_adv) seen.emplace(p.first, p.second);
	}
	EXPECT_EQ(seen.size(), 4u);
}

TEST(build_pairs, deterministic) {
	const auto b = vectors(40, label::benign, 0);
	const auto a = vectors(25, label::adversarial, 100);
	EXPECT_EQ(build_pairs(b, a, 120, 77).pairs, build_pairs(b, a, 120, 77).pairs);
	EXPECT_NE(build_pairs(b, a, 120, 77).pairs, build_pairs(b, a, 120, 78).pairs);
}

TEST(split, stratified_and_balanced) {
	const auto d = build_pairs(vectors(50, label::benign, 0), vectors(50, label::adversarial, 100), 100, 2, "S");
	const auto [train, val] = split(d, 0.8, 5);
	EXPECT_EQ(train.pairs.size(), 80u);
	EXPECT_EQ(val.pairs.size(), 20u);
	EXPECT_EQ(train.counts().dissimilar(), 40u);
	EXPECT_EQ(train.counts().similar(), 40u);
	EXPECT_EQ(val.counts().dissimilar(), 10u);
	EXPECT_EQ(val.counts().similar(), 10u);
	const auto again = split(d, 0.8, 5);
	EXPECT_EQ(again.first.pairs, train.pairs);
	EXPECT_EQ(again.second.pairs, val.pairs);

	const auto big = build_pairs(vectors(1620, label::benign, 0), vectors(1325, label::adversarial, 1e4), 2648, 8);
	const auto [bt, bv] = split(big, 0.8, 1);
	EXPECT_TRUE(bt.balanced(1));
	EXPECT_TRUE(bv.balanced(1));
	EXPECT_EQ(bt.pairs.size() + bv.pairs.size(), 2648u);

	const auto tiny = build_pairs(vectors(2, label::benign, 0), vectors(2, label::adversarial, 5), 2, 1);
	EXPECT_THROW(split(tiny, 0.8, 1), error);
	EXPECT_THROW(split(d, 1.0, 1), error);
}

TEST(merge, concatenates_and_tags) {
	const auto x = build_pairs(vectors(5, label::benign, 0), vectors(5, label::adversarial, 10), 8, 1, "D01");
	const auto y = build_pairs(vectors(5, label::benign, 0), vectors(5, label::adversarial, 10), 4, 2, "D06");
	const auto m = merge({&x, &y}, 3);
	EXPECT_EQ(m.pairs.size(), 12u);
	EXPECT_EQ(m.source_tag, "D01+D06");
	EXPECT_EQ(m.pairs[8].source, "D06");
}

TEST(pair_files, round_trip) {
	const auto d = build_pairs(vectors(6, label::benign, 0.1), vectors(6, label::adversarial, 10.3), 12, 4, "D09");
	const auto path = (std::filesystem::temp_directory_path() / "provfsl_pairs_test.tsv").string();
	save_pairs(path, d);
	const auto back = load_pairs(path);
	EXPECT_EQ(back.source_tag, "D09");
	EXPECT_EQ(back.seed, 4u);
	ASSERT_EQ(back.pairs.size(), d.pairs.size());
	for (std::size_t i = 0; i < d.pairs.size(); ++i) {
		EXPECT_EQ(back.pairs[i].a.values, d.pairs[i].a.values);
		EXPECT_EQ(back.pairs[i].b.values, d.pairs[i].b.values);
		EXPECT_EQ(back.pairs[i].kind, d.pairs[i].kind);
	}
	std::filesystem::remove(path);
	std::filesystem::remove(path + ".json");

	std::stringstream bad("y\tpair_kind\tvector_a\tvector_b\n1\tadv-adv\t1\t2\n");
	EXPECT_THROW(read_pairs(bad), parse_error);
}
