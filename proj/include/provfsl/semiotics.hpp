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

// Event sentences. Each system event becomes one line of the form
//
//   subject predicate [subject complement...] object [object complement...]
//
// e.g. "java clone /jetty/start.jar <NA>". The subject complement carries the
// script or archive that a shell, interpreter or VM is running, since the
// executable name alone does not identify the program.

#pragma once

#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "provfsl/error.hpp"
#include "provfsl/ingest.hpp"
#include "provfsl/kvconfig.hpp"
#include "provfsl/normalize.hpp"

namespace provfsl {

enum class subject_kind { plain, scripting_shell, interpreter, vm };

inline std::string_view to_string(subject_kind k) {
	switch (k) {
	case subject_kind::plain: return "plain";
	case subject_kind::scripting_shell: return "scripting_shell";
	case subject_kind::interpreter: return "interpreter";
	case subject_kind::vm: return "vm";
	}
	return "plain";
}

enum class object_complement_mode { none, parent_dir };

struct semiotics_config {
	std::vector<std::string> shells{"bash", "sh", "csh", "zsh", "dash"};
	std::vector<std::string> interpreters{"python", "python3", "perl", "ruby", "node"};
	std::vector<std::string> vms{"java", "scala", "kotlin"};
	std::size_t complement_cap = 6;
	object_complement_mode object_complement = object_complement_mode::none;
	normalizer_config normalizer;

	static semiotics_config from(const kv_config& kv) {
		semiotics_config c;
		c.shells = kv.get_list("shells", c.shells);
		c.interpreters = kv.get_list("interpreters", c.interpreters);
		c.vms = kv.get_list("vms", c.vms);
		const auto cap = kv.get_int("complement_cap", static_cast<std::int64_t>(c.complement_cap));
		if (cap < 0) {
			throw error(error_kind::usage, "complement_cap must be non-negative");
		}
		c.complement_cap = static_cast<std::size_t>(cap);
		const auto mode = kv.get_string("object_complement", "none");
		if (mode == "none") {
			c.object_complement = object_complement_mode::none;
		} else if (mode == "parent_dir") {
			c.object_complement = object_complement_mode::parent_dir;
		} else {
			throw error(error_kind::usage, "object_complement must be 'none' or 'parent_dir'");
		}
		c.normalizer = normalizer_config::from(kv, "normalize.");
		return c;
	}

	void store(kv_config& kv) const {
		kv.set("shells", shells);
		kv.set("interpreters", interpreters);
		kv.set("vms", vms);
		kv.set("complement_cap", static_cast<std::int64_t>(complement_cap));
		kv.set("object_complement", std::string(object_complement == object_complement_mode::none ? "none" : "parent_dir"));
		normalizer.store(kv, "normalize.");
	}
};

struct sentence_record {
	std::string subject;
	std::string predicate;
	std::vector<std::string> subject_complement;
	std::string object;
	std::vector<std::string> object_complement;
	provfsl::label label = label::unknown;
	std::string scenario_id;

	bool operator==(const sentence_record&) const = default;
};

namespace detail {

inline bool listed(std::string_view name, const std::vector<std::string>& names) {
	for (const auto& n : names) {
		if (n == name) {
			return true;
		}
	}
	return false;
}

// "python3.11" -> "python3" -> "python" style fallbacks.
inline std::string_view strip_version(std::string_view name) {
	const auto last = name.find_last_not_of("0123456789.");
	return last == std::string_view::npos ? name : name.substr(0, last + 1);
}

inline std::vector<std::string> split_ws(std::string_view s) {
	std::vector<std::string> out;
	std::size_t i = 0;
	while (i < s.size()) {
		while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) {
			++i;
		}
		std::size_t j = i;
		while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) {
			++j;
		}
		if (j > i) {
			out.emplace_back(s.substr(i, j - i));
		}
		i = j;
	}
	return out;
}

// Sentence tokens are space-delimited; embedded whitespace becomes '_'.
inline std::string collapse_ws(std::string_view s) {
	std::string out(s);
	for (char& c : out) {
		if (std::isspace(static_cast<unsigned char>(c))) {
			c = '_';
		}
	}
	return out;
}

} // namespace detail

inline subject_kind classify_subject(std::string_view exe_path, const semiotics_config& cfg = {}) {
	const auto name = base_name(exe_path);
	for (auto candidate : {name, detail::strip_version(name)}) {
		if (detail::listed(candidate, cfg.shells)) return subject_kind::scripting_shell;
		if (detail::listed(candidate, cfg.interpreters)) return subject_kind::interpreter;
		if (detail::listed(candidate, cfg.vms)) return subject_kind::vm;
	}
	return subject_kind::plain;
}

/// Flag-free, normalized program arguments for shells, interpreters and VMs.
/// Arguments holding whitespace (e.g. the body of `sh -c`) contribute one
/// token per word.
inline std::vector<std::string> build_subject_complement(subject_kind kind, const std::vector<std::string>& args,
                                                         const semiotics_config& cfg = {}) {
	std::vector<std::string> out;
	if (kind == subject_kind::plain) {
		return out;
	}
	for (const auto& arg : args) {
		if (arg.empty() || arg.front() == '-') {
			continue;
		}
		for (const auto& word : detail::split_ws(arg)) {
			if (out.size() >= cfg.complement_cap) {
				return out;
			}
			out.push_back(normalize_token(word, cfg.normalizer));
		}
	}
	return out;
}

inline sentence_record build_sentence(const raw_event& e, const semiotics_config& cfg = {}) {
	sentence_record s;
	const auto& norm = cfg.normalizer;

	// An executable launched from a temporary location keeps the placeholder
	// rather than its (volatile) name.
	if (!e.exe_path.empty()) {
		auto exe = normalize_token_explained(e.exe_path, norm);
		s.subject = exe.rule == norm_rule::identity ? std::string(base_name(e.exe_path)) : exe.token;
	}
	if (s.subject.empty()) {
		s.subject = normalize_token(detail::collapse_ws(e.proc_name), norm);
	}
	s.subject = detail::collapse_ws(s.subject);
	s.predicate = e.syscall;
	s.subject_complement = build_subject_complement(classify_subject(e.exe_path.empty() ? e.proc_name : e.exe_path, cfg),
	                                                e.args, cfg);

	if (e.fd_type == fd_type::none) {
		s.object = std::string(na_placeholder);
	} else {
		const auto target = detail::collapse_ws(e.fd_name);
		auto obj = normalize_token_explained(target, norm, e.fd_type == fd_type::pipe);
		// A program image loaded by exec is named like a subject: by its base name.
		if (obj.rule == norm_rule::identity && e.fd_type == fd_type::file &&
		    family_of(e.syscall) == syscall_family::process) {
			obj.token = std::string(base_name(target));
		}
		s.object = obj.token.empty() ? std::string(na_placeholder) : obj.token;

		if (cfg.object_complement == object_complement_mode::parent_dir && obj.rule != norm_rule::identity) {
			const auto slash = target.find_last_of("/\\");
			if (slash != std::string::npos && slash > 0) {
				s.object_complement.push_back(normalize_token(target.substr(0, slash), norm));
			}
		}
	}
	s.label = e.label;
	s.scenario_id = e.scenario_id;
	return s;
}

inline std::string render_sentence(const sentence_record& s) {
	std::string out = s.subject + " " + s.predicate;
	for (const auto& t : s.subject_complement) {
		out += " " + t;
	}
	out += " " + s.object;
	for (const auto& t : s.object_complement) {
		out += " " + t;
	}
	return out;
}

inline std::vector<std::string> tokenize(std::string_view line) { return detail::split_ws(line); }

/// Inverse of render_sentence. The rendered line does not delimit the two
/// complement lists, so the caller supplies the object complement length
/// (zero under the default configuration).
inline sentence_record parse_sentence(std::string_view line, std::size_t object_complement_len = 0) {
	const auto tokens = tokenize(line);
	if (tokens.size() < 3 + object_complement_len) {
		throw parse_error(0, "sentence", "too few tokens in sentence '" + std::string(line) + "'");
	}
	sentence_record s;
	s.subject = tokens[0];
	s.predicate = tokens[1];
	const std::size_t object_at = tokens.size() - object_complement_len - 1;
	s.subject_complement.assign(tokens.begin() + 2, tokens.begin() + static_cast<std::ptrdiff_t>(object_at));
	s.object = tokens[object_at];
	s.object_complement.assign(tokens.begin() + static_cast<std::ptrdiff_t>(object_at) + 1, tokens.end());
	return s;
}

/// One line of a sentence corpus file: "label<TAB>scenario_id<TAB>sentence".
struct corpus_entry {
	provfsl::label label = label::unknown;
	std::string scenario_id;
	std::string sentence;

	bool operator==(const corpus_entry&) const = default;
};

inline corpus_entry to_corpus_entry(const sentence_record& s) {
	return {s.label, s.scenario_id, render_sentence(s)};
}

inline std::string format_corpus_line(const corpus_entry& c) {
	return std::string(to_string(c.label)) + "\t" + c.scenario_id + "\t" + c.sentence;
}

inline corpus_entry parse_corpus_line(std::string_view line, std::size_t lineno = 0) {
	const auto t1 = line.find('\t');
	const auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
	if (t2 == std::string_view::npos) {
		throw parse_error(lineno, "", "corpus line needs label, scenario_id and sentence columns");
	}
	const auto lab = parse_label(line.substr(0, t1));
	if (!lab) {
		throw parse_error(lineno, "label", "unknown label");
	}
	corpus_entry c{*lab, std::string(line.substr(t1 + 1, t2 - t1 - 1)), std::string(line.substr(t2 + 1))};
	if (!c.sentence.empty() && c.sentence.back() == '\r') {
		c.sentence.pop_back();
	}
	return c;
}

inline std::vector<corpus_entry> read_corpus(std::istream& in) {
	std::vector<corpus_entry> out;
	std::string line;
	std::size_t lineno = 0;
	while (std::getline(in, line)) {
		++lineno;
		if (line.empty() || line == "\r") {
			continue;
		}
		out.push_back(parse_corpus_line(line, lineno));
	}
	return out;
}

inline std::vector<corpus_entry> load_corpus(const std::string& path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw error(error_kind::io, "cannot open corpus: " + path);
	}
	return read_corpus(in);
}

inline void write_corpus(std::ostream& out, const std::vector<corpus_entry>& entries) {
	for (const auto& c : entries) {
		out << format_corpus_line(c) << '\n';
	}
}

/// Re-applies token normalization to every token of an already rendered
/// sentence (used for corpora produced by other tools).
inline std::string normalize_sentence(std::string_view sentence, const normalizer_config& cfg) {
	std::string out;
	for (const auto& tok : tokenize(sentence)) {
		if (!out.empty()) {
			out += ' ';
		}
		out += normalize_token(tok, cfg);
	}
	return out;
}

} // namespace provfsl
