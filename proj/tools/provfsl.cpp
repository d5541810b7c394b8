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

// provfsl command-line front end.
//
// Exit codes: 0 ok, 1 usage, 2 data (including I/O and numeric failures),
// 3 failed gate (gradient check, accuracy thresholds).

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>
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
#include "provfsl/normalize.hpp"
#include "provfsl/pairs.hpp"
#include "provfsl/protocol.hpp"
#include "provfsl/scenario.hpp"
#include "provfsl/semiotics.hpp"

namespace fs = std::filesystem;
using namespace provfsl;

namespace {

constexpr const char* tool_version = "0.1.0";
constexpr const char* env_prefix = "PROVFSL";
constexpr double grad_check_tolerance = 1e-4;

struct gate_failure : std::runtime_error {
	using std::runtime_error::runtime_error;
};

bool verbose = false;

void note(const std::string& msg) {
	if (verbose) std::cerr << "provfsl: " << msg << '\n';
}

kv_config default_config() {
	kv_config kv;
	semiotics_config{}.store(kv);
	protocol_config{}.store(kv);
	kv.set("gen.benign", std::int64_t{400});
	kv.set("gen.attack", std::int64_t{200});
	return kv;
}

/// Defaults, then the file (if any), then PROVFSL_* environment overrides.
/// Keys unknown to the defaults are rejected so typos do not go unnoticed.
kv_config load_config(const std::string& path) {
	kv_config kv = default_config();
	if (!path.empty()) {
		const auto file = kv_config::load(path);
		for (const auto& [key, value] : file.values()) {
			if (!kv.contains(key)) {
				throw error(error_kind::usage, "unknown config key '" + key + "' in " + path);
			}
			kv.set(key, value);
		}
	}
	kv.apply_env(env_prefix);
	return kv;
}

void ensure_parent(const std::string& path) {
	const fs::path p(path);
	if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::ofstream open_out(const std::string& path) {
	ensure_parent(path);
	std::ofstream out(path, std::ios::binary);
	if (!out) throw error(error_kind::io, "cannot write " + path);
	return out;
}

on_error parse_policy(const std::string& s) { return s == "skip" ? on_error::skip : on_error::abort; }

std::vector<corpus_entry> sentences_from_trace(const std::string& path, const semiotics_config& cfg, on_error policy) {
	const auto t = load_trace(path, policy);
	for (const auto& w : t.warnings) std::cerr << path << ": " << w << '\n';
	return sentences_of(t.events, cfg);
}

void save_models(const std::string& dir, const std::map<std::string, group_artifacts>& artifacts) {
	fs::create_directories(dir);
	for (const auto& [gid, a] : artifacts) {
		a.embedder.save(dir + "/" + gid + ".embedder.tsv");
		a.model.save(dir + "/" + gid + ".siamese");
	}
}

void check_gates(const experiment_report& r, std::optional<double> min_mean, std::optional<double> min_run) {
	if (min_mean && r.mean_accuracy() < *min_mean) {
		throw gate_failure("mean accuracy " + detail::fixed6(r.mean_accuracy()) + " is below " + detail::fixed6(*min_mean));
	}
	if (min_run && !r.runs.empty() && r.weakest().m.accuracy < *min_run) {
		const auto& w = r.weakest();
		throw gate_failure("run " + w.group + "/" + w.test + " accuracy " + detail::fixed6(w.m.accuracy) +
		                   " is below " + detail::fixed6(*min_run));
	}
}

void print_summary(const experiment_report& r) {
	const auto& w = r.weakest();
	std::cout << "runs " << r.runs.size() << " mean_accuracy " << detail::fixed6(r.mean_accuracy())
	          << " min_accuracy " << detail::fixed6(w.m.accuracy) << " (" << w.group << "/" << w.test << ")\n";
}

} // namespace

int main(int argc, char** argv) {
	CLI::App app{"Few-shot detection of attack behavior in system-call provenance traces", "provfsl"};
	app.set_help_all_flag("--help-all", "Print help for every subcommand");

	std::string global_config;
	bool show_version = false;
	bool config_dump = false;
	app.add_option("--config", global_config, "Config file (TOML subset) used by --config-dump and by subcommands without their own --config");
	app.add_flag("--version", show_version, "Print version information as JSON and exit");
	app.add_flag("--config-dump", config_dump, "Print the merged configuration (defaults, file, PROVFSL_* environment) and exit");
	app.add_flag("-v,--verbose", verbose, "Progress messages on stderr");
	app.footer("Config keys may be overridden by environment variables: key 'train.epochs' is read from PROVFSL_TRAIN_EPOCHS.");

	auto config_of = [&](const std::string& local) { return load_config(local.empty() ? global_config : local); };

	// ingest
	auto* ingest = app.add_subcommand("ingest", "Validate a JSONL trace and write ingest statistics");
	std::string ingest_in, ingest_stats, ingest_policy = "abort";
	ingest->add_option("--in", ingest_in, "Trace file (JSONL)")->required();
	ingest->add_option("--stats", ingest_stats, "Statistics output (JSON); stdout when omitted");
	ingest->add_option("--on-error", ingest_policy, "Malformed lines: skip with a warning, or abort")
		->check(CLI::IsMember({"skip", "abort"}));

	// sentences
	auto* sentences = app.add_subcommand("sentences", "Turn a trace into a labeled sentence corpus");
	std::string sent_in, sent_out, sent_config, sent_policy = "abort";
	sentences->add_option("--in", sent_in, "Trace file (JSONL)")->required();
	sentences->add_option("--out", sent_out, "Corpus output (label<TAB>scenario<TAB>sentence)")->required();
	sentences->add_option("--config", sent_config, "Semiotics and normalizer config");
	sentences->add_option("--on-error", sent_policy, "Malformed trace lines: skip or abort")
		->check(CLI::IsMember({"skip", "abort"}));

	// normalize
	auto* normalize = app.add_subcommand("normalize", "Normalize the tokens of a corpus, or explain one token");
	std::string norm_in, norm_out, norm_config, norm_token;
	bool norm_pipe = false;
	normalize->add_option("--in", norm_in, "Corpus input");
	normalize->add_option("--out", norm_out, "Normalized corpus output");
	normalize->add_option("--config", norm_config, "Normalizer config ([normalize] section)");
	normalize->add_option("--token", norm_token, "Normalize one token and print the rule that fired");
	normalize->add_flag("--pipe", norm_pipe, "With --token: treat the token as the name of a pipe descriptor");

	// embed
	auto* embed = app.add_subcommand("embed", "Train or apply the sentence embedder");
	std::string emb_model, emb_in, emb_out, emb_config;
	bool emb_train = false;
	std::optional<std::uint64_t> emb_seed;
	embed->add_option("--model", emb_model, "Embedder model file (written with --train, read otherwise)")->required();
	embed->add_option("--in", emb_in, "Corpus input")->required();
	embed->add_option("--out", emb_out, "Vector output (label<TAB>scenario<TAB>v1,v2,...)");
	embed->add_flag("--train", emb_train, "Train a new model on --in and save it to --model first");
	embed->add_option("--config", emb_config, "Embedder config ([embed] section)");
	embed->add_option("--seed", emb_seed, "Training seed (overrides embed.seed)");

	// pairs
	auto* pairs = app.add_subcommand("pairs", "Build labeled similar/dissimilar pairs from event vectors");
	std::string pairs_benign, pairs_adv, pairs_out, pairs_val;
	std::size_t pairs_n = 400;
	std::uint64_t pairs_seed = 7;
	double pairs_val_fraction = 0.2;
	pairs->add_option("--benign", pairs_benign, "Benign vectors")->required();
	pairs->add_option("--adv", pairs_adv, "Adversarial vectors")->required();
	pairs->add_option("--n", pairs_n, "Number of pairs (even)")->capture_default_str();
	pairs->add_option("--seed", pairs_seed, "Sampling seed")->capture_default_str();
	pairs->add_option("--out", pairs_out, "Pair file output (a .json sidecar is written next to it)")->required();
	pairs->add_option("--val", pairs_val, "Also split off a stratified validation pair file");
	pairs->add_option("--val-fraction", pairs_val_fraction, "Share of pairs moved to --val")
		->check(CLI::Range(0.0, 1.0))->capture_default_str();

	// train-siamese
	auto* trainer = app.add_subcommand("train-siamese", "Train the siamese network and calibrate its threshold");
	std::string tr_pairs, tr_val, tr_config, tr_out;
	bool tr_grad_check = false;
	std::optional<std::uint64_t> tr_seed;
	trainer->add_option("--pairs", tr_pairs, "Training pair file");
	trainer->add_option("--val", tr_val, "Validation pair file used to calibrate the decision threshold");
	trainer->add_option("--config", tr_config, "Training config ([train] section)");
	trainer->add_option("--out", tr_out, "Model output");
	trainer->add_option("--seed", tr_seed, "Seed (overrides train.seed)");
	trainer->add_flag("--grad-check", tr_grad_check,
	                  "Compare analytic gradients with central differences on seeded networks; exit 3 above 1e-4");

	// detect
	auto* detect = app.add_subcommand("detect", "Classify event vectors against labeled references");
	std::string det_model, det_refs, det_in, det_out;
	std::size_t det_k = 5;
	detect->add_option("--model", det_model, "Siamese model")->required();
	detect->add_option("--refs", det_refs, "Labeled reference vectors")->required();
	detect->add_option("--in", det_in, "Vectors to classify")->required();
	detect->add_option("--out", det_out, "Verdicts (JSONL)")->required();
	detect->add_option("--k", det_k, "Nearest references averaged per side")->check(CLI::PositiveNumber)->capture_default_str();

	// eval
	auto* eval = app.add_subcommand("eval", "Run the grouped train/test protocol on scenario traces");
	std::string ev_protocol = "table5", ev_data, ev_out, ev_config, ev_models, ev_policy = "abort";
	std::optional<std::uint64_t> ev_seed;
	std::optional<double> ev_min_mean, ev_min_run;
	eval->add_option("--protocol", ev_protocol, "Evaluation protocol")->check(CLI::IsMember({"table5"}))->capture_default_str();
	eval->add_option("--data", ev_data, "Directory holding S01.jsonl .. S11.jsonl")->required();
	eval->add_option("--seed", ev_seed, "Root seed (overrides protocol.seed)");
	eval->add_option("--out", ev_out, "Report directory (report.tsv, summary.json)")->required();
	eval->add_option("--config", ev_config, "Config file");
	eval->add_option("--models", ev_models, "Also save per-group models into this directory");
	eval->add_option("--on-error", ev_policy, "Malformed trace lines: skip or abort")->check(CLI::IsMember({"skip", "abort"}));
	eval->add_option("--min-mean", ev_min_mean, "Exit 3 if the mean pair accuracy is below this value");
	eval->add_option("--min-run", ev_min_run, "Exit 3 if any run's pair accuracy is below this value");

	// gen
	auto* gen = app.add_subcommand("gen", "Generate a synthetic labeled trace from a scenario template");
	std::string gen_template, gen_out;
	std::uint64_t gen_seed = 7;
	std::size_t gen_benign = 400, gen_attack = 200;
	gen->add_option("--template", gen_template, "Template id (S01..S11) or name")->required();
	gen->add_option("--seed", gen_seed, "Seed")->capture_default_str();
	gen->add_option("--benign", gen_benign, "Relevant benign events")->check(CLI::PositiveNumber)->capture_default_str();
	gen->add_option("--attack", gen_attack, "Relevant attack events")->check(CLI::PositiveNumber)->capture_default_str();
	gen->add_option("--out", gen_out, "Trace output (JSONL)")->required();
	{
		std::string names;
		for (const auto& t : builtin_templates()) names += "\n  " + t.id + "  " + t.name;
		gen->footer("Templates:" + names);
	}

	// pipeline
	auto* pipeline = app.add_subcommand("pipeline", "Traces to report in one run: generate or load, sentences, train, evaluate");
	std::string pl_data = "synthetic", pl_out = "provfsl-run", pl_config;
	std::optional<std::uint64_t> pl_seed;
	std::optional<double> pl_min_mean, pl_min_run;
	pipeline->add_option("--data", pl_data, "'synthetic' or a directory holding S01.jsonl .. S11.jsonl")->capture_default_str();
	pipeline->add_option("--seed", pl_seed, "Root seed for generation and evaluation (overrides protocol.seed)");
	pipeline->add_option("--out", pl_out, "Output directory (traces/, corpus/, models/, report/)")->capture_default_str();
	pipeline->add_option("--config", pl_config, "Config file");
	pipeline->add_option("--min-mean", pl_min_mean, "Exit 3 if the mean pair accuracy is below this value");
	pipeline->add_option("--min-run", pl_min_run, "Exit 3 if any run's pair accuracy is below this value");

	if (argc < 2) {
		std::cerr << app.help();
		return 1;
	}

	try {
		app.parse(argc, argv);
	} catch (const CLI::CallForHelp& e) {
		return app.exit(e);
	} catch (const CLI::CallForAllHelp& e) {
		return app.exit(e);
	} catch (const CLI::ParseError& e) {
		app.exit(e);
		return 1;
	}

	try {
		if (show_version) {
			nlohmann::ordered_json j;
			j["name"] = "provfsl";
			j["version"] = tool_version;
			j["embedder_format"] = embedder_model::format_version;
			j["siamese_format"] = siamese_model::format_version;
			std::cout << j.dump() << '\n';
			return 0;
		}
		if (config_dump) {
			std::cout << load_config(global_config).dump();
			return 0;
		}

		if (*ingest) {
			const auto t = load_trace(ingest_in, parse_policy(ingest_policy));
			for (const auto& w : t.warnings) std::cerr << ingest_in << ": " << w << '\n';
			const auto j = t.stats.to_json().dump(2);
			if (ingest_stats.empty()) {
				std::cout << j << '\n';
			} else {
				open_out(ingest_stats) << j << '\n';
			}
			return 0;
		}

		if (*sentences) {
			const auto cfg = semiotics_config::from(config_of(sent_config));
			const auto corpus = sentences_from_trace(sent_in, cfg, parse_policy(sent_policy));
			auto out = open_out(sent_out);
			write_corpus(out, corpus);
			note(std::to_string(corpus.size()) + " sentences");
			return 0;
		}

		if (*normalize) {
			const auto cfg = normalizer_config::from(config_of(norm_config), "normalize.");
			if (!norm_token.empty()) {
				const auto r = normalize_token_explained(norm_token, cfg, norm_pipe);
				std::cout << r.token << '\t' << to_string(r.rule) << '\n';
				return 0;
			}
			if (norm_in.empty() || norm_out.empty()) {
				throw error(error_kind::usage, "normalize needs --in and --out, or --token");
			}
			auto corpus = load_corpus(norm_in);
			for (auto& c : corpus) c.sentence = normalize_sentence(c.sentence, cfg);
			auto out = open_out(norm_out);
			write_corpus(out, corpus);
			return 0;
		}

		if (*embed) {
			const auto corpus = load_corpus(emb_in);
			embedder_model model;
			if (emb_train) {
				auto cfg = embedder_config::from(config_of(emb_config), "embed.");
				if (emb_seed) cfg.seed = *emb_seed;
				std::vector<std::string> lines;
				for (const auto& c : corpus) lines.push_back(c.sentence);
				auto trained = train_embedder(lines, cfg);
				for (std::size_t i = 0; i < trained.epoch_loss.size(); ++i) {
					note("embed epoch " + std::to_string(i + 1) + " loss " + detail::fixed6(trained.epoch_loss[i]));
				}
				model = std::move(trained.model);
				ensure_parent(emb_model);
				model.save(emb_model);
			} else {
				model = embedder_model::load(emb_model);
			}
			if (!emb_out.empty()) {
				embed_stats stats;
				auto out = open_out(emb_out);
				for (const auto& c : corpus) out << format_vector_line(embed_sentence(model, c, &stats)) << '\n';
				std::cerr << "embedded " << stats.sentences << " sentences, " << stats.oov << " fully out of vocabulary\n";
			} else if (!emb_train) {
				throw error(error_kind::usage, "embed needs --out unless it only trains (--train)");
			}
			return 0;
		}

		if (*pairs) {
			// Distinct vectors per side; adversarial vectors equal to a benign
			// one carry no contrast and are dropped.
			auto distinct = [](const std::vector<event_vector>& in) {
				std::vector<event_vector> out;
				std::vector<std::string> keys;
				std::unordered_set<std::string> seen;
				for (const auto& v : in) {
					auto key = format_vector_line({v.values, label::unknown, {}});
					if (seen.insert(key).second) {
						out.push_back(v);
						keys.push_back(std::move(key));
					}
				}
				return std::pair{out, keys};
			};
			const auto [benign, benign_keys] = distinct(load_vectors(pairs_benign));
			const auto [adv_all, adv_keys] = distinct(load_vectors(pairs_adv));
			const std::unordered_set<std::string> benign_set(benign_keys.begin(), benign_keys.end());
			std::vector<event_vector> adv;
			for (std::size_t i = 0; i < adv_all.size(); ++i) {
				if (!benign_set.count(adv_keys[i])) adv.push_back(adv_all[i]);
			}
			if (benign.empty() || adv.empty()) {
				throw error(error_kind::data, "pairs need non-empty benign and refined adversarial vector sets");
			}
			if (benign.front().values.size() != adv.front().values.size()) {
				throw error(error_kind::data, "benign and adversarial vectors differ in length");
			}
			note(std::to_string(benign.size()) + " benign, " + std::to_string(adv.size()) + " adversarial distinct vectors");
			const auto d = build_pairs(benign, adv, pairs_n, pairs_seed, fs::path(pairs_out).stem().string());
			ensure_parent(pairs_out);
			if (pairs_val.empty()) {
				save_pairs(pairs_out, d);
			} else {
				auto [fit, val] = split(d, 1.0 - pairs_val_fraction, derive_seed(pairs_seed, "pairs.split"));
				fit.source_tag = val.source_tag = d.source_tag;
				ensure_parent(pairs_val);
				save_pairs(pairs_out, fit);
				save_pairs(pairs_val, val);
			}
			return 0;
		}

		if (*trainer) {
			auto cfg = train_config::from(config_of(tr_config), "train.");
			if (tr_seed) cfg.seed = *tr_seed;
			if (tr_grad_check) {
				const auto res = gradient_check_sweep(cfg.seed);
				std::cout << "max_relative_error " << embedder_model::format_double(res.max_relative_error) << " checked "
				          << res.checked << '\n';
				if (!(res.max_relative_error < grad_check_tolerance)) {
					throw gate_failure("gradient check failed");
				}
				return 0;
			}
			if (tr_pairs.empty() || tr_out.empty()) {
				throw error(error_kind::usage, "train-siamese needs --pairs and --out (or --grad-check)");
			}
			const auto fit = load_pairs(tr_pairs);
			auto run = train(fit, cfg);
			for (std::size_t i = 0; i < run.epoch_loss.size(); ++i) {
				note("epoch " + std::to_string(i + 1) + " loss " + detail::fixed6(run.epoch_loss[i]));
			}
			if (!tr_val.empty()) {
				const auto cal = calibrate_threshold(run.model, load_pairs(tr_val));
				std::cerr << "threshold " << detail::fixed6(cal.threshold) << " validation f1 " << detail::fixed6(cal.f1) << '\n';
			}
			ensure_parent(tr_out);
			run.model.save(tr_out);
			return 0;
		}

		if (*detect) {
			const auto model = siamese_model::load(det_model);
			reference_set refs;
			refs.k = det_k;
			for (auto& v : load_vectors(det_refs)) {
				if (v.label == label::benign) refs.benign_refs.push_back(std::move(v));
				else if (v.label == label::adversarial) refs.adv_refs.push_back(std::move(v));
			}
			const reference_index index(model, refs);
			const auto events = load_vectors(det_in);
			auto out = open_out(det_out);
			for (std::size_t i = 0; i < events.size(); ++i) {
				if (events[i].values.size() != model.params.input_dim()) {
					throw error(error_kind::data, "vector " + std::to_string(i + 1) + " does not match the model input size");
				}
				nlohmann::ordered_json j;
				j["index"] = i;
				j["scenario_id"] = events[i].scenario_id;
				j["label"] = std::string(to_string(events[i].label));
				j.update(to_json(index.classify(events[i].values)));
				out << j.dump() << '\n';
			}
			return 0;
		}

		if (*eval) {
			auto kv = config_of(ev_config);
			auto pcfg = protocol_config::from(kv);
			if (ev_seed) pcfg.seed = *ev_seed;
			const auto scfg = semiotics_config::from(kv);
			std::map<std::string, std::vector<corpus_entry>> corpora;
			for (const auto& t : builtin_templates()) {
				const auto path = (fs::path(ev_data) / (t.id + ".jsonl")).string();
				if (!fs::exists(path)) throw error(error_kind::data, "missing trace " + path);
				corpora[t.id] = sentences_from_trace(path, scfg, parse_policy(ev_policy));
			}
			const auto outcome = run_table5(corpora, pcfg);
			save_report(ev_out, outcome.report, outcome.datasets);
			if (!ev_models.empty()) save_models(ev_models, outcome.artifacts);
			print_summary(outcome.report);
			check_gates(outcome.report, ev_min_mean, ev_min_run);
			return 0;
		}

		if (*gen) {
			const auto all = builtin_templates();
			const auto& t = find_template(all, gen_template);
			auto out = open_out(gen_out);
			write_trace(out, generate_scenario(t, gen_seed, gen_benign, gen_attack));
			return 0;
		}

		if (*pipeline) {
			auto kv = config_of(pl_config);
			auto pcfg = protocol_config::from(kv);
			if (pl_seed) pcfg.seed = *pl_seed;
			const auto scfg = semiotics_config::from(kv);
			const auto all = builtin_templates();

			std::string trace_dir = pl_data;
			if (pl_data == "synthetic") {
				trace_dir = pl_out + "/traces";
				fs::create_directories(trace_dir);
				const auto n_benign = static_cast<std::size_t>(kv.get_int("gen.benign", 400));
				const auto n_attack = static_cast<std::size_t>(kv.get_int("gen.attack", 200));
				for (const auto& t : all) {
					auto out = open_out(trace_dir + "/" + t.id + ".jsonl");
					write_trace(out, generate_scenario(t, derive_seed(pcfg.seed, "gen." + t.id), n_benign, n_attack));
				}
				note("generated " + std::to_string(all.size()) + " traces");
			}

			std::map<std::string, std::vector<corpus_entry>> corpora;
			for (const auto& t : all) {
				const auto path = trace_dir + "/" + t.id + ".jsonl";
				if (!fs::exists(path)) throw error(error_kind::data, "missing trace " + path);
				auto corpus = sentences_from_trace(path, scfg, on_error::abort);
				for (auto& c : corpus) c.sentence = normalize_sentence(c.sentence, scfg.normalizer);
				auto out = open_out(pl_out + "/corpus/" + t.id + ".tsv");
				write_corpus(out, corpus);
				corpora[t.id] = std::move(corpus);
			}
			note("wrote sentence corpora");

			const auto outcome = run_table5(corpora, pcfg);
			save_models(pl_out + "/models", outcome.artifacts);
			save_report(pl_out + "/report", outcome.report, outcome.datasets);
			print_summary(outcome.report);
			check_gates(outcome.report, pl_min_mean, pl_min_run);
			return 0;
		}

		std::cerr << app.help();
		return 1;
	} catch (const gate_failure& e) {
		std::cerr << "provfsl: " << e.what() << '\n';
		return 3;
	} catch (const error& e) {
		std::cerr << "provfsl: " << e.what() << '\n';
		return e.kind() == error_kind::usage ? 1 : 2;
	} catch (const std::exception& e) {
		std::cerr << "provfsl: " << e.what() << '\n';
		return 2;
	}
}
