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

// Token normalization. Volatile names are replaced by placeholders so that
// the sentence vocabulary stays closed across recordings:
//
//   1. temporary directory or temporary file marker   -> <TMP>
//   2. OS internal state directory (/run, /dev, ...)  -> <TMP>
//   3. pipe designator                                -> <PIPE>
//   4. hash-like identifier                           -> <HASH>
//   5. anything else is kept verbatim
//
// The first matching rule wins.

#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "provfsl/error.hpp"
#include "provfsl/kvconfig.hpp"

namespace provfsl {

inline constexpr std::string_view tmp_placeholder = "<TMP>";
inline constexpr std::string_view pipe_placeholder = "<PIPE>";
inline constexpr std::string_view hash_placeholder = "<HASH>";
inline constexpr std::string_view na_placeholder = "<NA>";

inline bool is_placeholder(std::string_view t) {
	return t == tmp_placeholder || t == pipe_placeholder || t == hash_placeholder || t == na_placeholder;
}

struct normalizer_config {
	/// Directories reserved for temporary files. Backslash separators are
	/// folded to '/', and a '*' component matches any single directory name.
	std::vector<std::string> temp_dirs{
		"/tmp/", "/var/tmp/", "C:/Windows/Temp/", "C:/Users/*/AppData/Local/Temp/",
	};
	/// Directories holding volatile OS state.
	std::vector<std::string> state_dirs{"/run/", "/dev/", "/proc/", "/sys/"};
	/// Base-name prefixes and extensions marking temporary files.
	std::vector<std::string> temp_prefixes{".tmp"};
	std::vector<std::string> temp_extensions{".tmp"};
	/// Extensions of persistent files; such names are never hash-like.
	std::vector<std::string> stable_extensions{
		".conf", ".jar", ".so", ".log", ".txt", ".json", ".xml", ".yaml",
		".yml", ".py", ".sh", ".js", ".html", ".css", ".service",
	};
	std::size_t hash_min_len = 16;
	double hash_transition_ratio = 0.25;
	std::size_t hash_min_classes = 2;

	void validate() const {
		auto check_dirs = [](const std::vector<std::string>& dirs, const char* key) {
			for (const auto& d : dirs) {
				const bool unix_abs = !d.empty() && (d.front() == '/' || d.front() == '\\');
				const bool drive_abs = d.size() >= 3 && d[1] == ':' && (d[2] == '/' || d[2] == '\\');
				const bool terminated = !d.empty() && (d.back() == '/' || d.back() == '\\');
				if (!(unix_abs || drive_abs) || !terminated) {
					throw error(error_kind::usage, std::string(key) + ": prefix '" + d + "' must be absolute and end with a separator");
				}
			}
		};
		check_dirs(temp_dirs, "temp_dirs");
		check_dirs(state_dirs, "state_dirs");
		if (!(hash_transition_ratio > 0.0 && hash_transition_ratio <= 1.0)) {
			throw error(error_kind::usage, "hash_transition_ratio must lie in (0, 1]");
		}
		if (hash_min_classes < 1 || hash_min_classes > 3) {
			throw error(error_kind::usage, "hash_min_classes must lie in [1, 3]");
		}
	}

	static normalizer_config from(const kv_config& kv, const std::string& prefix = "") {
		normalizer_config c;
		c.temp_dirs = kv.get_list(prefix + "temp_dirs", c.temp_dirs);
		c.state_dirs = kv.get_list(prefix + "state_dirs", c.state_dirs);
		c.temp_prefixes = kv.get_list(prefix + "temp_prefixes", c.temp_prefixes);
		c.temp_extensions = kv.get_list(prefix + "temp_extensions", c.temp_extensions);
		c.stable_extensions = kv.get_list(prefix + "stable_extensions", c.stable_extensions);
		c.hash_min_len = static_cast<std::size_t>(kv.get_int(prefix + "hash_min_len", static_cast<std::int64_t>(c.hash_min_len)));
		c.hash_transition_ratio = kv.get_double(prefix + "hash_transition_ratio", c.hash_transition_ratio);
		c.hash_min_classes = static_cast<std::size_t>(kv.get_int(prefix + "hash_min_classes", static_cast<std::int64_t>(c.hash_min_classes)));
		c.validate();
		return c;
	}

	void store(kv_config& kv, const std::string& prefix = "") const {
		kv.set(prefix + "temp_dirs", temp_dirs);
		kv.set(prefix + "state_dirs", state_dirs);
		kv.set(prefix + "temp_prefixes", temp_prefixes);
		kv.set(prefix + "temp_extensions", temp_extensions);
		kv.set(prefix + "stable_extensions", stable_extensions);
		kv.set(prefix + "hash_min_len", static_cast<std::int64_t>(hash_min_len));
		kv.set(prefix + "hash_transition_ratio", hash_transition_ratio);
		kv.set(prefix + "hash_min_classes", static_cast<std::int64_t>(hash_min_classes));
	}
};

namespace detail {

inline std::string fold_separators(std::string_view t) {
	std::string out(t);
	std::replace(out.begin(), out.end(), '\\', '/');
	return out;
}

// Prefix match where a "*" component of the pattern matches one component
// of the path.
inline bool matches_dir_prefix(std::string_view path, std::string_view pattern) {
	std::size_t p = 0;
	std::size_t i = 0;
	while (p < pattern.size()) {
		if (pattern[p] == '*') {
			while (i < path.size() && path[i] != '/') {
				++i;
			}
			++p;
			continue;
		}
		if (i >= path.size() || path[i] != pattern[p]) {
			return false;
		}
		++i;
		++p;
	}
	return true;
}

inline bool under_any(std::string_view token, const std::vector<std::string>& dirs) {
	const std::string path = fold_separators(token);
	for (const auto& d : dirs) {
		if (matches_dir_prefix(path, fold_separators(d))) {
			return true;
		}
	}
	return false;
}

enum class char_class { letter, digit, other };

inline char_class classify_char(char c) {
	if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return char_class::letter;
	if (c >= '0' && c <= '9') return char_class::digit;
	return char_class::other;
}

inline bool is_hex(char c) {
	return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

} // namespace detail

/// Final path component, accepting either separator.
inline std::string_view base_name(std::string_view t) {
	const auto slash = t.find_last_of("/\\");
	return slash == std::string_view::npos ? t : t.substr(slash + 1);
}

/// Every dot suffix of the base name: "libssl.so.1.1" -> {".so", ".1", ".1"}.
/// A leading dot (hidden file) does not start a suffix.
inline std::vector<std::string_view> suffix_chain(std::string_view base) {
	std::vector<std::string_view> out;
	std::size_t pos = base.find('.', 1);
	while (pos != std::string_view::npos) {
		const auto next = base.find('.', pos + 1);
		out.push_back(base.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
		pos = next;
	}
	return out;
}

inline bool has_temp_marker(std::string_view t, const normalizer_config& cfg) {
	const auto base = base_name(t);
	for (const auto& p : cfg.temp_prefixes) {
		if (base.starts_with(p)) {
			return true;
		}
	}
	for (const auto& ext : cfg.temp_extensions) {
		if (base.size() > ext.size() && base.ends_with(ext)) {
			return true;
		}
	}
	return false;
}

/// In a temporary directory, or named like a temporary file.
inline bool is_temp_location(std::string_view t, const normalizer_config& cfg) {
	return detail::under_any(t, cfg.temp_dirs) || has_temp_marker(t, cfg);
}

inline bool is_internal_state(std::string_view t, const normalizer_config& cfg) {
	return detail::under_any(t, cfg.state_dirs);
}

/// Either temporary-file rule or the OS internal-state rule.
inline bool is_temp_path(std::string_view t, const normalizer_config& cfg) {
	return is_temp_location(t, cfg) || is_internal_state(t, cfg);
}

inline bool is_pipe_designator(std::string_view t) {
	return t == "pipe" || t.starts_with("pipe:");
}

inline bool has_stable_extension(std::string_view base, const normalizer_config& cfg) {
	for (auto suffix : suffix_chain(base)) {
		for (const auto& ext : cfg.stable_extensions) {
			if (suffix == ext) {
				return true;
			}
		}
	}
	return false;
}

/// 8-4-4-4-12 hexadecimal.
inline bool is_uuid(std::string_view s) {
	if (s.size() != 36) {
		return false;
	}
	for (std::size_t i = 0; i < s.size(); ++i) {
		const bool dash = i == 8 || i == 13 || i == 18 || i == 23;
		if (dash ? s[i] != '-' : !detail::is_hex(s[i])) {
			return false;
		}
	}
	return true;
}

struct char_variety {
	std::size_t length = 0;
	std::size_t classes = 0;
	std::size_t transitions = 0;

	double transition_ratio() const {
		return length < 2 ? 0.0 : static_cast<double>(transitions) / static_cast<double>(length - 1);
	}
};

inline char_variety measure_variety(std::string_view s) {
	char_variety v;
	v.length = s.size();
	bool seen[3] = {false, false, false};
	for (std::size_t i = 0; i < s.size(); ++i) {
		const auto c = detail::classify_char(s[i]);
		seen[static_cast<int>(c)] = true;
		if (i > 0 && c != detail::classify_char(s[i - 1])) {
			++v.transitions;
		}
	}
	v.classes = static_cast<std::size_t>(seen[0]) + seen[1] + seen[2];
	return v;
}

/// Frequent letter/digit/symbol alternation in the final path component,
/// unless the name carries a well-known persistent extension.
inline bool is_hash_like(std::string_view t, const normalizer_config& cfg) {
	const auto base = base_name(t);
	if (base.empty() || has_stable_extension(base, cfg)) {
		return false;
	}
	if (is_uuid(base)) {
		return true;
	}
	const auto v = measure_variety(base);
	return v.length >= cfg.hash_min_len && v.classes >= cfg.hash_min_classes &&
	       v.transition_ratio() >= cfg.hash_transition_ratio;
}

enum class norm_rule { temp_file, internal_state, pipe, hash, identity };

inline std::string_view to_string(norm_rule r) {
	switch (r) {
	case norm_rule::temp_file: return "temp_file";
	case norm_rule::internal_state: return "internal_state";
	case norm_rule::pipe: return "pipe";
	case norm_rule::hash: return "hash";
	case norm_rule::identity: return "identity";
	}
	return "identity";
}

struct normalized_token {
	std::string token;
	norm_rule rule;
};

/// Applies the rules in order and reports which one fired. `pipe_fd` marks
/// tokens that came from a descriptor the recorder typed as a pipe.
inline normalized_token normalize_token_explained(std::string_view t, const normalizer_config& cfg, bool pipe_fd = false) {
	if (is_temp_location(t, cfg)) {
		return {std::string(tmp_placeholder), norm_rule::temp_file};
	}
	if (is_internal_state(t, cfg)) {
		return {std::string(tmp_placeholder), norm_rule::internal_state};
	}
	if (pipe_fd || is_pipe_designator(t)) {
		return {std::string(pipe_placeholder), norm_rule::pipe};
	}
	if (is_hash_like(t, cfg)) {
		return {std::string(hash_placeholder), norm_rule::hash};
	}
	return {std::string(t), norm_rule::identity};
}

inline std::string normalize_token(std::string_view t, const normalizer_config& cfg, bool pipe_fd = false) {
	return normalize_token_explained(t, cfg, pipe_fd).token;
}

} // namespace provfsl
