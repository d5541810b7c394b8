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

// A small reader for the TOML subset used by the configuration files:
//
//   # comment
//   [section]
//   key = "text" | 42 | 0.25 | true | ["a", "b"]
//
// Section names are folded into dotted keys ("section.key"). Nested tables,
// inline tables, multi-line arrays and dates are not supported.

#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "provfsl/error.hpp"

namespace provfsl {

using kv_value = std::variant<bool, std::int64_t, double, std::string, std::vector<std::string>>;

class kv_config {
public:
	kv_config() = default;

	static kv_config parse(std::string_view text, std::string_view origin = "<memory>") {
		kv_config cfg;
		std::string section;
		std::size_t lineno = 0;
		std::size_t pos = 0;
		while (pos <= text.size()) {
			const std::size_t nl = text.find('\n', pos);
			std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
			pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
			++lineno;
			line = trim(strip_comment(line));
			if (line.empty()) {
				continue;
			}
			if (line.front() == '[') {
				if (line.back() != ']') {
					fail(origin, lineno, "unterminated section header");
				}
				section = std::string(trim(line.substr(1, line.size() - 2)));
				continue;
			}
			const std::size_t eq = line.find('=');
			if (eq == std::string_view::npos) {
				fail(origin, lineno, "expected key = value");
			}
			std::string key(trim(line.substr(0, eq)));
			if (key.empty()) {
				fail(origin, lineno, "empty key");
			}
			if (!section.empty()) {
				key = section + "." + key;
			}
			cfg.m_values[key] = parse_value(trim(line.substr(eq + 1)), origin, lineno);
		}
		return cfg;
	}

	static kv_config load(const std::string& path) {
		std::ifstream in(path, std::ios::binary);
		if (!in) {
			throw error(error_kind::io, "cannot open config file: " + path);
		}
		std::stringstream ss;
		ss << in.rdbuf();
		return parse(ss.str(), path);
	}

	bool contains(const std::string& key) const { return m_values.count(key) != 0; }
	const std::map<std::string, kv_value>& values() const { return m_values; }
	void set(const std::string& key, kv_value v) { m_values[key] = std::move(v); }

	/// Overrides keys from the environment: key "a.b_c" is read from
	/// PREFIX_A_B_C. The textual value is parsed with the same grammar.
	void apply_env(std::string_view prefix) {
		for (auto& [key, value] : m_values) {
			std::string name(prefix);
			name += '_';
			for (char c : key) {
				name += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
			}
			if (const char* env = std::getenv(name.c_str())) {
				value = parse_value(trim(env), name, 0);
			}
		}
	}

	std::string get_string(const std::string& key, std::string fallback) const {
		return get_as<std::string>(key, std::move(fallback));
	}

	bool get_bool(const std::string& key, bool fallback) const { return get_as<bool>(key, fallback); }

	std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
		return get_as<std::int64_t>(key, fallback);
	}

	double get_double(const std::string& key, double fallback) const {
		auto it = m_values.find(key);
		if (it == m_values.end()) {
			return fallback;
		}
		if (const auto* i = std::get_if<std::int64_t>(&it->second)) {
			return static_cast<double>(*i);
		}
		return get_as<double>(key, fallback);
	}

	std::vector<std::string> get_list(const std::string& key, std::vector<std::string> fallback) const {
		return get_as<std::vector<std::string>>(key, std::move(fallback));
	}

	/// Serializes back to the same grammar, keys sorted.
	std::string dump() const {
		std::string out;
		for (const auto& [key, value] : m_values) {
			out += key + " = " + format_value(value) + "\n";
		}
		return out;
	}

	static std::string format_value(const kv_value& v) {
		struct visitor {
			std::string operator()(bool b) const { return b ? "true" : "false"; }
			std::string operator()(std::int64_t i) const { return std::to_string(i); }
			std::string operator()(double d) const {
				char buf[64];
				auto res = std::to_chars(buf, buf + sizeof buf, d);
				std::string s(buf, res.ptr);
				if (s.find_first_of(".eEn") == std::string::npos) {
					s += ".0";
				}
				return s;
			}
			std::string operator()(const std::string& s) const { return quote(s); }
			std::string operator()(const std::vector<std::string>& xs) const {
				std::string out = "[";
				for (std::size_t i = 0; i < xs.size(); ++i) {
					out += (i ? ", " : "") + quote(xs[i]);
				}
				return out + "]";
			}
		};
		return std::visit(visitor{}, v);
	}

private:
	template <typename T>
	T get_as(const std::string& key, T fallback) const {
		auto it = m_values.find(key);
		if (it == m_values.end()) {
			return fallback;
		}
		if (const auto* v = std::get_if<T>(&it->second)) {
			return *v;
		}
		throw error(error_kind::usage, "config key '" + key + "' has the wrong type");
	}

	static std::string quote(const std::string& s) {
		std::string out = "\"";
		for (char c : s) {
			if (c == '"' || c == '\\') {
				out += '\\';
			}
			out += c;
		}
		return out + "\"";
	}

	[[noreturn]] static void fail(std::string_view origin, std::size_t line, const std::string& msg) {
		throw error(error_kind::usage, std::string(origin) + ":" + std::to_string(line) + ": " + msg);
	}

	static std::string_view trim(std::string_view s) {
		const auto b = s.find_first_not_of(" \t\r");
		if (b == std::string_view::npos) {
			return {};
		}
		const auto e = s.find_last_not_of(" \t\r");
		return s.substr(b, e - b + 1);
	}

	// '#' outside of a quoted string starts a comment.
	static std::string_view strip_comment(std::string_view s) {
		bool quoted = false;
		for (std::size_t i = 0; i < s.size(); ++i) {
			if (s[i] == '\\' && quoted) {
				++i;
			} else if (s[i] == '"') {
				quoted = !quoted;
			} else if (s[i] == '#' && !quoted) {
				return s.substr(0, i);
			}
		}
		return s;
	}

	static std::string parse_string(std::string_view& s, std::string_view origin, std::size_t line) {
		// s starts at the opening quote
		std::string out;
		std::size_t i = 1;
		for (; i < s.size() && s[i] != '"'; ++i) {
			if (s[i] == '\\' && i + 1 < s.size()) {
				++i;
				switch (s[i]) {
				case 'n': out += '\n'; break;
				case 't': out += '\t'; break;
				default: out += s[i];
				}
			} else {
				out += s[i];
			}
		}
		if (i >= s.size()) {
			fail(origin, line, "unterminated string");
		}
		s.remove_prefix(i + 1);
		return out;
	}

	static kv_value parse_value(std::string_view v, std::string_view origin, std::size_t line) {
		if (v.empty()) {
			fail(origin, line, "missing value");
		}
		if (v.front() == '"') {
			std::string_view rest = v;
			std::string s = parse_string(rest, origin, line);
			if (!trim(rest).empty()) {
				fail(origin, line, "trailing characters after string");
			}
			return s;
		}
		if (v.front() == '[') {
			std::vector<std::string> items;
			std::string_view rest = trim(v.substr(1));
			while (!rest.empty() && rest.front() != ']') {
				if (rest.front() != '"') {
					fail(origin, line, "arrays may only hold strings");
				}
				items.push_back(parse_string(rest, origin, line));
				rest = trim(rest);
				if (!rest.empty() && rest.front() == ',') {
					rest = trim(rest.substr(1));
				}
			}
			if (rest.empty()) {
				fail(origin, line, "unterminated array");
			}
			return items;
		}
		if (v == "true" || v == "false") {
			return v == "true";
		}
		std::int64_t i = 0;
		auto ires = std::from_chars(v.data(), v.data() + v.size(), i);
		if (ires.ec == std::errc{} && ires.ptr == v.data() + v.size()) {
			return i;
		}
		double d = 0.0;
		auto dres = std::from_chars(v.data(), v.data() + v.size(), d);
		if (dres.ec == std::errc{} && dres.ptr == v.data() + v.size()) {
			return d;
		}
		fail(origin, line, "cannot parse value '" + std::string(v) + "'");
	}

	std::map<std::string, kv_value> m_values;
};

} // namespace provfsl
