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

// Trace ingestion: one JSON object per line, one system call per object.
//
//   {"ts":1,"syscall":"open","proc_name":"ps","pid":42,"exe_path":"/bin/ps",
//    "args":[],"fd_type":"file","fd_name":"/proc/42/stat","label":"benign",
//    "scenario_id":"C01"}
//
// Unknown keys are ignored. Events whose system call is outside the process,
// file and network families are dropped and counted.

#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "provfsl/error.hpp"

namespace provfsl {

enum class label { benign, adversarial, unknown };

inline std::string_view to_string(label l) {
	switch (l) {
	case label::benign: return "benign";
	case label::adversarial: return "adversarial";
	case label::unknown: return "unknown";
	}
	return "unknown";
}

inline std::optional<label> parse_label(std::string_view s) {
	if (s == "benign") return label::benign;
	if (s == "adversarial") return label::adversarial;
	if (s == "unknown") return label::unknown;
	return std::nullopt;
}

enum class fd_type { file, pipe, ipv4, ipv6, none };

inline std::string_view to_string(fd_type t) {
	switch (t) {
	case fd_type::file: return "file";
	case fd_type::pipe: return "pipe";
	case fd_type::ipv4: return "ipv4";
	case fd_type::ipv6: return "ipv6";
	case fd_type::none: return "none";
	}
	return "none";
}

inline std::optional<fd_type> parse_fd_type(std::string_view s) {
	if (s == "file") return fd_type::file;
	if (s == "pipe") return fd_type::pipe;
	if (s == "ipv4") return fd_type::ipv4;
	if (s == "ipv6") return fd_type::ipv6;
	if (s == "none") return fd_type::none;
	return std::nullopt;
}

struct raw_event {
	std::int64_t ts = 0;
	std::string syscall;
	std::string proc_name;
	std::int64_t pid = 1;
	std::string exe_path;
	std::vector<std::string> args;
	provfsl::fd_type fd_type = fd_type::none;
	std::string fd_name;
	provfsl::label label = label::unknown;
	std::string scenario_id;

	bool operator==(const raw_event&) const = default;
};

enum class syscall_family { process, file, network };

inline std::string_view to_string(syscall_family f) {
	switch (f) {
	case syscall_family::process: return "process";
	case syscall_family::file: return "file";
	case syscall_family::network: return "network";
	}
	return "process";
}

namespace detail {

struct family_entry {
	std::string_view name;
	syscall_family family;
};

inline constexpr std::array<family_entry, 15> family_table{{
	{"fork", syscall_family::process},
	{"vfork", syscall_family::process},
	{"clone", syscall_family::process},
	{"exec", syscall_family::process},
	{"kill", syscall_family::process},
	{"open", syscall_family::file},
	{"close", syscall_family::file},
	{"read", syscall_family::file},
	{"write", syscall_family::file},
	{"unlink", syscall_family::file},
	{"dup", syscall_family::file},
	{"rename", syscall_family::file},
	{"chmod", syscall_family::file},
	{"listen", syscall_family::network},
	{"connect", syscall_family::network},
}};

// Variants that the generic prefix/suffix rules cannot reach.
inline constexpr std::array<std::pair<std::string_view, std::string_view>, 14> syscall_aliases{{
	{"execve", "exec"},
	{"creat", "open"},
	{"tkill", "kill"},
	{"tgkill", "kill"},
	{"fchmod", "chmod"},
	{"lchmod", "chmod"},
	{"readv", "read"},
	{"writev", "write"},
	{"preadv", "read"},
	{"pwritev", "write"},
	{"close_range", "close"},
	{"rmdir", "unlink"},
	{"accept", "listen"},
	{"accept4", "listen"},
}};

inline std::optional<syscall_family> base_family(std::string_view name) {
	for (const auto& e : family_table) {
		if (e.name == name) {
			return e.family;
		}
	}
	return std::nullopt;
}

inline std::optional<std::string_view> alias_of(std::string_view name) {
	for (const auto& [from, to] : syscall_aliases) {
		if (from == name) {
			return to;
		}
	}
	return std::nullopt;
}

} // namespace detail

/// Maps a kernel syscall variant onto its family base name ("openat" ->
/// "open", "clone3" -> "clone", "pread64" -> "read"). Returns nullopt for
/// names outside the process/file/network families.
inline std::optional<std::string> canonical_syscall(std::string_view name, int depth = 0) {
	if (name.empty() || depth > 4) {
		return std::nullopt;
	}
	if (detail::base_family(name)) {
		return std::string(name);
	}
	if (auto alias = detail::alias_of(name)) {
		return std::string(*alias);
	}
	if (const auto last = name.find_last_not_of("0123456789"); last != std::string_view::npos && last + 1 < name.size()) {
		if (auto r = canonical_syscall(name.substr(0, last + 1), depth + 1)) {
			return r;
		}
	}
	if (name.size() > 2 && name.ends_with("at")) {
		if (auto r = canonical_syscall(name.substr(0, name.size() - 2), depth + 1)) {
			return r;
		}
	}
	if (name.size() > 1 && name.front() == 'p') {
		if (auto r = canonical_syscall(name.substr(1), depth + 1)) {
			return r;
		}
	}
	return std::nullopt;
}

inline std::optional<syscall_family> family_of(std::string_view syscall) {
	if (auto canon = canonical_syscall(syscall)) {
		return detail::base_family(*canon);
	}
	return std::nullopt;
}

/// Returns `e` unchanged when its system call belongs to a family.
inline std::optional<raw_event> filter_relevant(const raw_event& e) {
	if (family_of(e.syscall)) {
		return e;
	}
	return std::nullopt;
}

namespace detail {

inline bool valid_syscall_name(std::string_view s) {
	if (s.empty()) {
		return false;
	}
	for (char c : s) {
		const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
		if (!ok) {
			return false;
		}
	}
	return true;
}

// "addr:port", split at the last colon; IPv6 addresses may be bracketed.
inline bool valid_endpoint(std::string_view s) {
	const auto colon = s.rfind(':');
	if (colon == std::string_view::npos || colon == 0 || colon + 1 == s.size()) {
		return false;
	}
	const auto port = s.substr(colon + 1);
	if (port.size() > 5) {
		return false;
	}
	unsigned value = 0;
	for (char c : port) {
		if (c < '0' || c > '9') {
			return false;
		}
		value = value * 10 + static_cast<unsigned>(c - '0');
	}
	return value <= 65535;
}

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, std::size_t line) {
	auto it = obj.find(key);
	if (it == obj.end()) {
		throw parse_error(line, key, "missing required field");
	}
	return *it;
}

inline std::string require_string(const nlohmann::json& obj, const char* key, std::size_t line) {
	const auto& v = require(obj, key, line);
	if (!v.is_string()) {
		throw parse_error(line, key, "expected a string");
	}
	return v.get<std::string>();
}

inline std::int64_t require_int(const nlohmann::json& obj, const char* key, std::size_t line) {
	const auto& v = require(obj, key, line);
	if (!v.is_number_integer()) {
		throw parse_error(line, key, "expected an integer");
	}
	return v.get<std::int64_t>();
}

} // namespace detail

/// Parses and validates one trace record. `line` is only used for error
/// reporting.
inline raw_event parse_event_line(std::string_view text, std::size_t line = 0) {
	nlohmann::json obj;
	try {
		obj = nlohmann::json::parse(text);
	} catch (const nlohmann::json::parse_error& e) {
		throw parse_error(line, "", std::string("malformed JSON: ") + e.what());
	}
	if (!obj.is_object()) {
		throw parse_error(line, "", "record is not a JSON object");
	}

	raw_event e;
	e.ts = detail::require_int(obj, "ts", line);
	e.syscall = detail::require_string(obj, "syscall", line);
	if (!detail::valid_syscall_name(e.syscall)) {
		throw parse_error(line, "syscall", "syscall must be non-empty lowercase ASCII");
	}
	e.proc_name = detail::require_string(obj, "proc_name", line);
	e.pid = detail::require_int(obj, "pid", line);
	if (e.pid <= 0) {
		throw parse_error(line, "pid", "pid must be positive");
	}
	e.exe_path = detail::require_string(obj, "exe_path", line);
	if (!e.exe_path.empty() && e.exe_path.front() != '/') {
		throw parse_error(line, "exe_path", "exe_path must be absolute");
	}
	if (e.exe_path.empty() && e.proc_name.empty()) {
		throw parse_error(line, "proc_name", "either exe_path or proc_name must be set");
	}

	const auto& args = detail::require(obj, "args", line);
	if (!args.is_array()) {
		throw parse_error(line, "args", "expected an array of strings");
	}
	for (const auto& a : args) {
		if (!a.is_string()) {
			throw parse_error(line, "args", "expected an array of strings");
		}
		e.args.push_back(a.get<std::string>());
	}

	const auto fd = parse_fd_type(detail::require_string(obj, "fd_type", line));
	if (!fd) {
		throw parse_error(line, "fd_type", "fd_type must be one of file, pipe, ipv4, ipv6, none");
	}
	e.fd_type = *fd;
	e.fd_name = detail::require_string(obj, "fd_name", line);
	if (e.fd_type == fd_type::none && !e.fd_name.empty()) {
		throw parse_error(line, "fd_name", "fd_name must be empty when fd_type is none");
	}
	if (e.fd_type != fd_type::none && e.fd_name.empty()) {
		throw parse_error(line, "fd_name", "fd_name must be set unless fd_type is none");
	}
	for (const char* reserved : {"<TMP>", "<PIPE>", "<HASH>", "<NA>"}) {
		if (e.fd_name == reserved) {
			throw parse_error(line, "fd_name", "fd_name '" + e.fd_name + "' is a reserved placeholder");
		}
	}
	if ((e.fd_type == fd_type::ipv4 || e.fd_type == fd_type::ipv6) && !detail::valid_endpoint(e.fd_name)) {
		throw parse_error(line, "fd_name", "network fd_name must be addr:port");
	}

	const auto lab = parse_label(detail::require_string(obj, "label", line));
	if (!lab) {
		throw parse_error(line, "label", "label must be one of benign, adversarial, unknown");
	}
	e.label = *lab;
	e.scenario_id = detail::require_string(obj, "scenario_id", line);
	return e;
}

/// Inverse of parse_event_line; keys are emitted in declaration order.
inline std::string to_json_line(const raw_event& e) {
	nlohmann::ordered_json obj;
	obj["ts"] = e.ts;
	obj["syscall"] = e.syscall;
	obj["proc_name"] = e.proc_name;
	obj["pid"] = e.pid;
	obj["exe_path"] = e.exe_path;
	obj["args"] = e.args;
	obj["fd_type"] = std::string(to_string(e.fd_type));
	obj["fd_name"] = e.fd_name;
	obj["label"] = std::string(to_string(e.label));
	obj["scenario_id"] = e.scenario_id;
	return obj.dump();
}

enum class on_error { skip, abort };

struct ingest_stats {
	std::size_t total_lines = 0; // non-blank lines seen
	std::size_t kept = 0;
	std::size_t dropped = 0;     // valid but outside the syscall families
	std::size_t errors = 0;

	bool operator==(const ingest_stats&) const = default;

	nlohmann::ordered_json to_json() const {
		nlohmann::ordered_json j;
		j["total_lines"] = total_lines;
		j["kept"] = kept;
		j["dropped"] = dropped;
		j["errors"] = errors;
		return j;
	}
};

struct trace {
	std::vector<raw_event> events;
	ingest_stats stats;
	std::vector<std::string> warnings;
};

inline trace read_trace(std::istream& in, on_error policy = on_error::abort) {
	trace out;
	std::string line;
	std::size_t lineno = 0;
	while (std::getline(in, line)) {
		++lineno;
		if (!line.empty() && line.back() == '\r') {
			line.pop_back();
		}
		if (line.find_first_not_of(" \t") == std::string::npos) {
			continue;
		}
		++out.stats.total_lines;
		raw_event e;
		try {
			e = parse_event_line(line, lineno);
		} catch (const parse_error& err) {
			if (policy == on_error::abort) {
				throw;
			}
			++out.stats.errors;
			out.warnings.emplace_back(err.what());
			continue;
		}
		if (auto kept = filter_relevant(e)) {
			out.events.push_back(std::move(*kept));
			++out.stats.kept;
		} else {
			++out.stats.dropped;
		}
	}
	return out;
}

inline trace load_trace(const std::string& path, on_error policy = on_error::abort) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw error(error_kind::io, "cannot open trace: " + path);
	}
	return read_trace(in, policy);
}

} // namespace provfsl
