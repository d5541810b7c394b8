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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <unistd.h>
#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "provfsl/protocol.hpp"
#include "reference_normalizer.hpp"

namespace fs = std::filesystem;
using namespace provfsl;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
	return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string read_file(const fs::path& p) {
	std::ifstream in(p, std::ios::binary);
	std::stringstream s;
	s << in.rdbuf();
	return s.str();
}

const fs::path& workdir() {
	static const fs::path dir = [] {
		auto d = fs::temp_directory_path() / ("provfsl_acceptance_" + std::to_string(::getpid()));
		fs::remove_all(d);
		fs::create_directories(d);
		return d;
	}();
	return dir;
}

int run_cli(const std::string& args, const fs::path& log) {
	const std::string cmd = "'" PROVFSL_CLI "' " + args + " > '" + log.string() + "' 2>&1";
	const int status = std::system(cmd.c_str());
	return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct outcome {
	bool pass = false;
	std::string detail;
};

// Criterion 1: refined = distinct adversarial - overlap, on multisets with
// the reference per-category cardinalities.
outcome refinement_arithmetic() {
	struct row {
		const char* id;
		std::size_t adversarial, overlap, benign, expected;
	};
	const row rows[] = {
		{"C01-05", 4516, 2629, 4341, 1887}, {"C06", 438, 178, 272, 260}, {"C07", 237, 190, 324, 47},
		{"C08", 2527, 1202, 1620, 1325},    {"C09", 477, 309, 336, 168}, {"C10", 399, 324, 339, 75},
		{"C11", 5041, 2958, 3678, 2083},
	};
	const auto t0 = clock_type::now();
	outcome o{true, {}};
	for (const auto& r : rows) {
		std::vector<std::string> benign, adv;
		for (std::size_t i = 0; i < r.benign; ++i) benign.push_back("benign " + std::to_string(i));
		for (std::size_t i = 0; i < r.adversarial; ++i) {
			const auto s = i < r.overlap ? "benign " + std::to_string(i) : "attack " + std::to_string(i);
			adv.push_back(s);
			adv.push_back(s);
		}
		const auto got = refine_adversarial_counted(benign, adv).refined.size();
		o.detail += std::string(o.detail.empty() ? "" : " ") + r.id + ":" + std::to_string(got);
		o.pass = o.pass && got == r.expected;
	}
	const double secs = seconds_since(t0);
	o.pass = o.pass && secs < 1.0;
	o.detail += " (" + std::to_string(secs) + " s)";
	return o;
}

// Criterion 2: agreement with the independent reference normalizer.
outcome normalization_oracle() {
	const normalizer_config cfg;
	std::size_t agree = 0;
	const auto corpus = oracle::generate_token_corpus(1000, 7);
	for (const auto& t : corpus) agree += normalize_token(t, cfg) == oracle::reference_normalize(t);
	const bool examples = normalize_token("/var/lib/docker/.tmp-config.v2.json07205514", cfg) == "<TMP>" &&
	                      normalize_token("pipe:[184520]", cfg) == "<PIPE>" &&
	                      normalize_token("75619cbc-879c-4076-8539-181392588ced", cfg) == "<HASH>";
	return {agree == corpus.size() && examples,
	        std::to_string(agree) + "/" + std::to_string(corpus.size()) + " agree, examples " + (examples ? "ok" : "wrong")};
}

// Criterion 3: analytic vs central-difference gradients.
outcome gradient_check_criterion() {
	const auto t0 = clock_type::now();
	const auto r = gradient_check_sweep(2026, 20, 1e-5);
	const double secs = seconds_since(t0);
	char buf[160];
	std::snprintf(buf, sizeof buf, "max relative error %.3g over %zu coordinates (%.2f s)", r.max_relative_error, r.checked,
	              secs);
	return {r.max_relative_error < 1e-4 && secs < 30.0, buf};
}

// Criterion 4: loss identities, distance symmetry, sentence round trip.
outcome identities(const std::vector<corpus_entry>& corpus) {
	bool ok = contrastive_loss(0.0, 0, 1.0) == 0.0;
	for (double d : {1.0, 1.5, 7.0}) ok = ok && contrastive_loss(d, 1, 1.0) == 0.0;
	rng r(4);
	subnet_params p(20, 32);
	p.init_he_uniform(9);
	std::size_t symmetric = 0;
	for (int i = 0; i < 1000; ++i) {
		std::vector<double> a(20), b(20);
		for (auto& x : a) x = r.normal();
		for (auto& x : b) x = r.normal();
		symmetric += pair_distance(p, a, b) == pair_distance(p, b, a);
	}
	std::size_t round_trips = 0;
	for (const auto& c : corpus) round_trips += render_sentence(parse_sentence(c.sentence)) == c.sentence;
	ok = ok && symmetric == 1000 && round_trips == corpus.size();
	return {ok, "symmetric " + std::to_string(symmetric) + "/1000, round trips " + std::to_string(round_trips) + "/" +
	                std::to_string(corpus.size())};
}

// Criterion 5: some confusion matrix over 516 pairs reproduces all four
// reported percentages within 0.15 points.
outcome metrics_consistency() {
	const double target[4] = {0.882, 0.930, 0.826, 0.875}; // accuracy, precision, recall, f1
	const std::size_t n = 516;
	std::size_t found = 0;
	confusion_counts first;
	for (std::size_t tp = 1; tp <= n; ++tp) {
		for (std::size_t fp = 0; tp + fp <= n; ++fp) {
			for (std::size_t fn = 0; tp + fp + fn <= n; ++fn) {
				const confusion_counts c{tp, fp, fn, n - tp - fp - fn};
				const auto m = compute_metrics(c);
				const double got[4] = {m.accuracy, m.precision, m.recall, m.f1};
				bool close = true;
				for (int k = 0; k < 4 && close; ++k) close = std::abs(got[k] - target[k]) <= 0.0015;
				if (close && found++ == 0) first = c;
			}
		}
	}
	if (found == 0) return {false, "no consistent confusion matrix"};
	return {true, std::to_string(found) + " consistent matrices, e.g. tp=" + std::to_string(first.tp) + " fp=" +
	                  std::to_string(first.fp) + " fn=" + std::to_string(first.fn) + " tn=" + std::to_string(first.tn)};
}

// Criterion 6: the full grouped protocol, read from the first pipeline run.
outcome generalization(const fs::path& run, double secs) {
	for (const auto& t : builtin_templates()) {
		const auto tr = load_trace((run / "traces" / (t.id + ".jsonl")).string());
		std::size_t benign = 0, attack = 0;
		for (const auto& e : tr.events) {
			benign += e.label == label::benign;
			attack += e.label == label::adversarial;
		}
		if (benign < 300 || attack < 150) return {false, t.id + " has too few events"};
	}
	std::ifstream in(run / "report" / "report.tsv");
	std::string line;
	std::getline(in, line);
	std::size_t runs = 0;
	double sum = 0.0, worst = 2.0;
	std::string worst_run;
	while (std::getline(in, line)) {
		std::vector<std::string> cols;
		std::stringstream s(line);
		for (std::string c; std::getline(s, c, '\t');) cols.push_back(c);
		const double acc = std::stod(cols.at(8));
		++runs;
		sum += acc;
		if (acc < worst) {
			worst = acc;
			worst_run = cols[0] + "/" + cols[2];
		}
	}
	const double mean = runs ? sum / static_cast<double>(runs) : 0.0;
	char buf[200];
	std::snprintf(buf, sizeof buf, "%zu runs, mean %.4f, min %.4f (%s), %.1f s", runs, mean, worst, worst_run.c_str(), secs);
	return {runs == 18 && mean >= 0.85 && worst >= 0.75 && secs < 600.0, buf};
}

// Criterion 7: "httpd execve sh" sits closer to "java execve sh" than to an
// unrelated benign sentence. 10 embedder seeds x 10 random sentences.
outcome embedding_semantics(const std::vector<corpus_entry>& corpus) {
	std::vector<std::string> lines, unrelated;
	for (const auto& c : corpus) {
		lines.push_back(c.sentence);
		const auto tok = tokenize(c.sentence);
		if (c.label == label::benign && tok[1] != "execve" && tok[0] != "httpd" && tok[0] != "java" && tok[0] != "sh") {
			unrelated.push_back(c.sentence);
		}
	}
	std::size_t wins = 0, trials = 0;
	rng pick(77);
	for (std::uint64_t seed = 1; seed <= 10; ++seed) {
		embedder_config cfg;
		cfg.seed = seed;
		const auto m = train_embedder(lines, cfg).model;
		const auto s1 = m.embed("httpd execve sh").values;
		const auto s2 = m.embed("java execve sh").values;
		const double close = cosine(s1, s2);
		for (int i = 0; i < 10; ++i, ++trials) {
			wins += close > cosine(s1, m.embed(pick.pick(unrelated)).values);
		}
	}
	return {wins * 10 >= trials * 9, std::to_string(wins) + "/" + std::to_string(trials) + " triples ordered as expected"};
}

} // namespace

int main() {
	int failures = 0;
	auto report = [&](int id, const char* name, const outcome& o) {
		std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " " << name << ": " << o.detail << std::endl;
		failures += !o.pass;
	};
	auto guarded = [](const std::function<outcome()>& f) {
		try {
			return f();
		} catch (const std::exception& e) {
			return outcome{false, std::string("exception: ") + e.what()};
		}
	};

	const auto dir = workdir();
	const auto t0 = clock_type::now();
	const int first = run_cli("pipeline --data synthetic --seed 7 --out '" + (dir / "run1").string() + "'", dir / "run1.log");
	const double first_secs = seconds_since(t0);
	const int second = run_cli("pipeline --data synthetic --seed 7 --out '" + (dir / "run2").string() + "'", dir / "run2.log");

	std::vector<corpus_entry> corpus;
	if (first == 0) {
		for (const auto& t : builtin_templates()) {
			const auto part = load_corpus((dir / "run1" / "corpus" / (t.id + ".tsv")).string());
			corpus.insert(corpus.end(), part.begin(), part.end());
		}
	}

	report(1, "refinement arithmetic", guarded(refinement_arithmetic));
	report(2, "normalization oracle", guarded(normalization_oracle));
	report(3, "gradient check", guarded(gradient_check_criterion));
	report(4, "loss and identity suite", guarded([&] {
		       return corpus.empty() ? outcome{false, "pipeline failed"} : identities(corpus);
	       }));
	report(5, "metrics consistency", guarded(metrics_consistency));
	report(6, "end-to-end generalization", guarded([&] {
		       return first != 0 ? outcome{false, "pipeline exit " + std::to_string(first)}
		                         : generalization(dir / "run1", first_secs);
	       }));
	report(7, "embedding semantics", guarded([&] {
		       return corpus.empty() ? outcome{false, "pipeline failed"} : embedding_semantics(corpus);
	       }));
	report(8, "determinism", guarded([&] {
		       if (first != 0 || second != 0) return outcome{false, "pipeline failed"};
		       bool same = true;
		       for (const char* f : {"report/report.tsv", "report/summary.json"}) {
			       const auto a = read_file(dir / "run1" / f);
			       same = same && !a.empty() && a == read_file(dir / "run2" / f);
		       }
		       return outcome{same, same ? "reports byte-identical" : "reports differ"};
	       }));

	fs::remove_all(dir);
	return failures == 0 ? 0 : 1;
}
