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

// Unseen-attack protocol: models trained on a prefix of the datasets are
// tested on each held-out dataset.

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "provfsl/detect.hpp"
#include "provfsl/embed.hpp"
#include "provfsl/error.hpp"
#include "provfsl/fewshot.hpp"
#include "provfsl/ingest.hpp"
#include "provfsl/kvconfig.hpp"
#include "provfsl/metrics.hpp"
#include "provfsl/pairs.hpp"
#include "provfsl/rng.hpp"
#include "provfsl/scenario.hpp"
#include "provfsl/semiotics.hpp"

namespace provfsl {

struct dataset_spec {
	std::string id;
	std::vector<std::string> scenarios;
	std::size_t n_pairs = 400;
};

/// D01-05 merges the first five scenarios; D06..D11 hold one each.
inline std::vector<dataset_spec> table5_datasets(std::size_t pairs_merged = 4000, std::size_t pairs_single = 1600) {
	std::vector<dataset_spec> out{{"D01-05", {"S01", "S02", "S03", "S04", "S05"}, pairs_merged}};
	for (int i = 6; i <= 11; ++i) {
		char id[8];
		std::snprintf(id, sizeof id, "%02d", i);
		out.push_back({std::string("D") + id, {std::string("S") + id}, pairs_single});
	}
	return out;
}

struct group_spec {
	std::string id;
	std::vector<std::string> train;
	std::vector<std::string> test;
};

/// G1 trains on the first dataset and tests on the rest; each later group
/// moves one more dataset into training.
inline std::vector<group_spec> table5_groups(const std::vector<std::string>& dataset_ids, std::size_t n_groups = 4) {
	if (dataset_ids.size() < n_groups + 1) {
		throw error(error_kind::usage, "too few datasets for the group protocol");
	}
	std::vector<group_spec> out;
	for (std::size_t g = 0; g < n_groups; ++g) {
		group_spec s;
		s.id = "G" + std::to_string(g + 1);
		s.train.assign(dataset_ids.begin(), dataset_ids.begin() + static_cast<std::ptrdiff_t>(g + 1));
		s.test.assign(dataset_ids.begin() + static_cast<std::ptrdiff_t>(g + 1), dataset_ids.end());
		out.push_back(std::move(s));
	}
	return out;
}

/// Sentences of one dataset with the distinct benign set, the refined
/// adversarial set and a fixed index-level pair plan.
struct prepared_dataset {
	std::string id;
	std::vector<corpus_entry> corpus;
	std::vector<std::string> benign;
	refinement adversarial;
	std::vector<index_pair> plan;
};

inline prepared_dataset prepare_dataset(const std::string& id, const std::vector<corpus_entry>& corpus,
                                        std::size_t n_pairs, std::uint64_t seed) {
	prepared_dataset d;
	d.id = id;
	d.corpus = corpus;
	std::vector<std::string> benign_all, adv_all;
	std::unordered_set<std::string> seen;
	for (const auto& c : corpus) {
		if (c.label == label::benign) {
			benign_all.push_back(c.sentence);
			if (seen.insert(c.sentence).second) d.benign.push_back(c.sentence);
		} else if (c.label == label::adversarial) {
			adv_all.push_back(c.sentence);
		}
	}
	if (d.benign.empty()) {
		throw error(error_kind::data, "dataset " + id + " has no benign events");
	}
	d.adversarial = refine_adversarial_counted(benign_all, adv_all);
	if (d.adversarial.refined.empty()) {
		throw error(error_kind::data, "dataset " + id + " has no adversarial events left after refinement");
	}
	d.plan = plan_pairs(d.benign.size(), d.adversarial.refined.size(), n_pairs, seed);
	return d;
}

inline std::vector<corpus_entry> sentences_of(const std::vector<raw_event>& events, const semiotics_config& cfg) {
	std::vector<corpus_entry> out;
	out.reserve(events.size());
	for (const auto& e : events) {
		if (filter_relevant(e)) {
			out.push_back(to_corpus_entry(build_sentence(e, cfg)));
		}
	}
	return out;
}

struct protocol_config {
	std::uint64_t seed = 7;
	embedder_config embed;
	train_config train;
	double calibration_train_fraction = 0.8;
	std::size_t k = 5;
	bool event_level = true;
	std::size_t pairs_merged = 4000;
	std::size_t pairs_single = 1600;
	std::size_t groups = 4;

	static protocol_config from(const kv_config& kv) {
		protocol_config c;
		auto count = [&](const std::string& key, std::size_t fallback) {
			const auto v = kv.get_int(key, static_cast<std::int64_t>(fallback));
			if (v < 1) throw error(error_kind::usage, key + " must be positive");
			return static_cast<std::size_t>(v);
		};
		c.seed = static_cast<std::uint64_t>(kv.get_int("protocol.seed", static_cast<std::int64_t>(c.seed)));
		c.embed = embedder_config::from(kv, "embed.");
		c.train = train_config::from(kv, "train.");
		c.calibration_train_fraction = kv.get_double("protocol.calibration_train_fraction", c.calibration_train_fraction);
		if (!(c.calibration_train_fraction > 0.0 && c.calibration_train_fraction < 1.0)) {
			throw error(error_kind::usage, "protocol.calibration_train_fraction must lie in (0, 1)");
		}
		c.k = count("protocol.k", c.k);
		c.event_level = kv.get_bool("protocol.event_level", c.event_level);
		c.pairs_merged = count("protocol.pairs_merged", c.pairs_merged);
		c.pairs_single = count("protocol.pairs_single", c.pairs_single);
		c.groups = count("protocol.groups", c.groups);
		return c;
	}

	void store(kv_config& kv) const {
		kv.set("protocol.seed", static_cast<std::int64_t>(seed));
		kv.set("embed.dim", static_cast<std::int64_t>(embed.dim));
		kv.set("embed.epochs", static_cast<std::int64_t>(embed.epochs));
		kv.set("embed.learning_rate", embed.learning_rate);
		kv.set("embed.negatives", static_cast<std::int64_t>(embed.negatives));
		kv.set("embed.min_count", static_cast<std::int64_t>(embed.min_count));
		kv.set("embed.word_ngrams", static_cast<std::int64_t>(embed.word_ngrams));
		kv.set("embed.seed", static_cast<std::int64_t>(embed.seed));
		train.store(kv, "train.");
		kv.set("protocol.calibration_train_fraction", calibration_train_fraction);
		kv.set("protocol.k", static_cast<std::int64_t>(k));
		kv.set("protocol.event_level", event_level);
		kv.set("protocol.pairs_merged", static_cast<std::int64_t>(pairs_merged));
		kv.set("protocol.pairs_single", static_cast<std::int64_t>(pairs_single));
		kv.set("protocol.groups", static_cast<std::int64_t>(groups));
	}
};

struct run_result {
	std::string group;
	std::string train; // "+"-joined dataset ids
	std::string test;
	std::size_t pairs = 0;
	confusion_counts counts;
	metrics m;
	double threshold = 0.0;
	double event_tpr = 0.0; // refined adversarial events judged adversarial
	double event_tnr = 0.0; // distinct benign events judged benign
	std::set<std::string> fit_sources; // datasets that fed training or calibration
};

struct experiment_report {
	std::vector<run_result> runs;
	std::map<std::string, std::vector<double>> epoch_loss; // per group, siamese training

	double mean_accuracy() const {
		if (runs.empty()) return 0.0;
		double s = 0.0;
		for (const auto& r : runs) s += r.m.accuracy;
		return s / static_cast<double>(runs.size());
	}

	const run_result& weakest() const {
		if (runs.empty()) throw error(error_kind::data, "empty report");
		return *std::min_element(runs.begin(), runs.end(),
		                         [](const run_result& a, const run_result& b) { return a.m.accuracy < b.m.accuracy; });
	}
};

namespace detail {

inline std::string fixed6(double v) {
	char buf[64];
	std::snprintf(buf, sizeof buf, "%.6f", v);
	return buf;
}

struct vectorized {
	std::vector<event_vector> benign;
	std::vector<event_vector> adversarial;
};

inline vectorized vectorize(const embedder_model& m, const prepared_dataset& d) {
	vectorized v;
	for (const auto& s : d.benign) v.benign.push_back({m.embed(s).values, label::benign, d.id});
	for (const auto& s : d.adversarial.refined) v.adversarial.push_back({m.embed(s).values, label::adversarial, d.id});
	return v;
}

inline pair_dataset materialize(const prepared_dataset& d, const vectorized& v) {
	pair_dataset out;
	out.source_tag = d.id;
	for (const auto& ip : d.plan) {
		event_pair p;
		p.kind = ip.kind;
		p.y = label_of(ip.kind);
		p.source = d.id;
		switch (ip.kind) {
		case pair_kind::benign_benign:
			p.a = v.benign[ip.first];
			p.b = v.benign[ip.second];
			break;
		case pair_kind::adv_adv:
			p.a = v.adversarial[ip.first];
			p.b = v.adversarial[ip.second];
			break;
		case pair_kind::benign_adv:
			p.a = v.benign[ip.first];
			p.b = v.adversarial[ip.second];
			break;
		}
		out.pairs.push_back(std::move(p));
	}
	return out;
}

inline const prepared_dataset& find_dataset(const std::vector<prepared_dataset>& all, const std::string& id) {
	for (const auto& d : all) {
		if (d.id == id) return d;
	}
	throw error(error_kind::usage, "unknown dataset id: " + id);
}

} // namespace detail

struct group_artifacts {
	embedder_model embedder;
	siamese_model model;
};

/// Runs every group. The model of a group depends only on its training
/// datasets, so it is fitted once and shared by that group's runs.
inline experiment_report run_group_experiment(const std::vector<prepared_dataset>& datasets,
                                              const std::vector<group_spec>& groups, const protocol_config& cfg,
                                              std::map<std::string, group_artifacts>* artifacts = nullptr) {
	if (groups.empty()) {
		throw error(error_kind::usage, "no experiment groups");
	}
	experiment_report report;
	for (const auto& g : groups) {
		if (g.train.empty() || g.test.empty()) {
			throw error(error_kind::usage, "group " + g.id + " needs at least one train and one test dataset");
		}
		for (const auto& t : g.test) {
			if (std::find(g.train.begin(), g.train.end(), t) != g.train.end()) {
				throw error(error_kind::usage, "group " + g.id + " tests on its own training dataset " + t);
			}
		}

		std::vector<std::string> sentences;
		for (const auto& id : g.train) {
			for (const auto& c : detail::find_dataset(datasets, id).corpus) sentences.push_back(c.sentence);
		}
		embedder_config ecfg = cfg.embed;
		ecfg.seed = derive_seed(cfg.seed, "embed." + g.id);
		const embedder_model embedder = train_embedder(sentences, ecfg).model;

		std::vector<pair_dataset> parts;
		reference_set refs;
		refs.k = cfg.k;
		std::string train_tag;
		for (const auto& id : g.train) {
			const auto& d = detail::find_dataset(datasets, id);
			const auto v = detail::vectorize(embedder, d);
			parts.push_back(detail::materialize(d, v));
			refs.benign_refs.insert(refs.benign_refs.end(), v.benign.begin(), v.benign.end());
			refs.adv_refs.insert(refs.adv_refs.end(), v.adversarial.begin(), v.adversarial.end());
			train_tag += (train_tag.empty() ? "" : "+") + id;
		}
		std::vector<const pair_dataset*> part_ptrs;
		for (const auto& p : parts) part_ptrs.push_back(&p);
		const auto merged = merge(part_ptrs, derive_seed(cfg.seed, "merge." + g.id));
		const auto [fit, val] = split(merged, cfg.calibration_train_fraction, derive_seed(cfg.seed, "split." + g.id));

		std::set<std::string> fit_sources;
		for (const auto* set : {&fit, &val}) {
			for (const auto& p : set->pairs) fit_sources.insert(p.source);
		}

		train_config tcfg = cfg.train;
		tcfg.seed = derive_seed(cfg.seed, "train." + g.id);
		auto run = train(fit, tcfg);
		const auto cal = calibrate_threshold(run.model, val);
		report.epoch_loss[g.id] = run.epoch_loss;

		std::optional<reference_index> index;
		if (cfg.event_level) index.emplace(run.model, refs);

		for (const auto& test_id : g.test) {
			const auto& d = detail::find_dataset(datasets, test_id);
			const auto v = detail::vectorize(embedder, d);
			const auto pairs = detail::materialize(d, v);
			run_result r;
			r.group = g.id;
			r.train = train_tag;
			r.test = test_id;
			r.pairs = pairs.pairs.size();
			r.counts = evaluate_pairs(run.model, pairs);
			r.m = compute_metrics(r.counts);
			r.threshold = cal.threshold;
			r.fit_sources = fit_sources;
			if (index) {
				std::size_t hit = 0;
				for (const auto& e : v.adversarial) hit += index->classify(e.values).decision == label::adversarial;
				r.event_tpr = static_cast<double>(hit) / static_cast<double>(v.adversarial.size());
				std::size_t ok = 0;
				for (const auto& e : v.benign) ok += index->classify(e.values).decision == label::benign;
				r.event_tnr = static_cast<double>(ok) / static_cast<double>(v.benign.size());
			}
			report.runs.push_back(std::move(r));
		}
		if (artifacts) {
			(*artifacts)[g.id] = {embedder, run.model};
		}
	}
	return report;
}

inline void write_report_tsv(std::ostream& out, const experiment_report& r) {
	using detail::fixed6;
	out << "group\ttrain\ttest\tpairs\ttp\tfp\tfn\ttn\taccuracy\tprecision\trecall\tf1\tthreshold\tevent_tpr\tevent_tnr\n";
	for (const auto& x : r.runs) {
		out << x.group << '\t' << x.train << '\t' << x.test << '\t' << x.pairs << '\t' << x.counts.tp << '\t'
		    << x.counts.fp << '\t' << x.counts.fn << '\t' << x.counts.tn << '\t' << fixed6(x.m.accuracy) << '\t'
		    << fixed6(x.m.precision) << '\t' << fixed6(x.m.recall) << '\t' << fixed6(x.m.f1) << '\t'
		    << fixed6(x.threshold) << '\t' << fixed6(x.event_tpr) << '\t' << fixed6(x.event_tnr) << '\n';
	}
}

inline nlohmann::ordered_json report_summary(const experiment_report& r, const std::vector<prepared_dataset>& datasets) {
	using detail::fixed6;
	nlohmann::ordered_json j;
	j["runs"] = r.runs.size();
	j["mean_accuracy"] = fixed6(r.mean_accuracy());
	if (!r.runs.empty()) {
		const auto& w = r.weakest();
		j["min_accuracy"] = fixed6(w.m.accuracy);
		j["min_run"] = w.group + "/" + w.test;
	}
	nlohmann::ordered_json ds = nlohmann::ordered_json::array();
	for (const auto& d : datasets) {
		ds.push_back({{"id", d.id},
		              {"events", d.corpus.size()},
		              {"benign_distinct", d.benign.size()},
		              {"adversarial_distinct", d.adversarial.adversarial_distinct},
		              {"overlap", d.adversarial.overlap},
		              {"refined", d.adversarial.refined.size()},
		              {"pairs", d.plan.size()}});
	}
	j["datasets"] = ds;
	return j;
}

/// Writes report.tsv and summary.json into `dir`.
inline void save_report(const std::string& dir, const experiment_report& r, const std::vector<prepared_dataset>& datasets) {
	std::filesystem::create_directories(dir);
	{
		std::ofstream out(dir + "/report.tsv", std::ios::binary);
		if (!out) throw error(error_kind::io, "cannot write " + dir + "/report.tsv");
		write_report_tsv(out, r);
	}
	std::ofstream out(dir + "/summary.json", std::ios::binary);
	if (!out) throw error(error_kind::io, "cannot write " + dir + "/summary.json");
	out << report_summary(r, datasets).dump(2) << '\n';
}

/// Builds the datasets of `specs` from per-scenario corpora.
inline std::vector<prepared_dataset> prepare_datasets(const std::vector<dataset_spec>& specs,
                                                      const std::map<std::string, std::vector<corpus_entry>>& corpora,
                                                      std::uint64_t seed) {
	std::vector<prepared_dataset> out;
	for (const auto& s : specs) {
		std::vector<corpus_entry> merged;
		for (const auto& sc : s.scenarios) {
			auto it = corpora.find(sc);
			if (it == corpora.end()) {
				throw error(error_kind::data, "dataset " + s.id + " needs scenario " + sc + ", which is missing");
			}
			merged.insert(merged.end(), it->second.begin(), it->second.end());
		}
		out.push_back(prepare_dataset(s.id, merged, s.n_pairs, derive_seed(seed, "pairs." + s.id)));
	}
	return out;
}

struct synthetic_options {
	std::size_t n_benign = 400;
	std::size_t n_attack = 200;
};

/// Generates every built-in scenario from `seed` (one substream each).
inline std::map<std::string, std::vector<raw_event>> generate_all(std::uint64_t seed, const synthetic_options& o) {
	std::map<std::string, std::vector<raw_event>> out;
	for (const auto& t : builtin_templates()) {
		out[t.id] = generate_scenario(t, derive_seed(seed, "gen." + t.id), o.n_benign, o.n_attack);
	}
	return out;
}

/// Everything one table5 evaluation produces.
struct table5_outcome {
	std::vector<prepared_dataset> datasets;
	experiment_report report;
	std::map<std::string, group_artifacts> artifacts;
};

/// Full protocol from per-scenario sentence corpora.
inline table5_outcome run_table5(const std::map<std::string, std::vector<corpus_entry>>& corpora,
                                 const protocol_config& cfg) {
	table5_outcome out;
	out.datasets = prepare_datasets(table5_datasets(cfg.pairs_merged, cfg.pairs_single), corpora, cfg.seed);
	std::vector<std::string> ids;
	for (const auto& d : out.datasets) ids.push_back(d.id);
	out.report = run_group_experiment(out.datasets, table5_groups(ids, cfg.groups), cfg, &out.artifacts);
	return out;
}

} // namespace provfsl
