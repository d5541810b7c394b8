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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace provfsl {

/// Coarse error category; the CLI maps these onto exit codes.
enum class error_kind {
	usage,   // bad arguments or configuration
	data,    // malformed or inconsistent input data
	io,      // file system failures
	numeric, // NaN/Inf or degenerate numerical state
};

class error : public std::runtime_error {
public:
	error(error_kind kind, const std::string& what)
		: std::runtime_error(what), m_kind(kind) {}

	error_kind kind() const noexcept { return m_kind; }

private:
	error_kind m_kind;
};

/// A trace or sentence line that failed validation. Carries the 1-based
/// line number (0 when parsing a detached line) and the offending field.
class parse_error : public error {
public:
	parse_error(std::size_t line, std::string field, const std::string& msg)
		: error(error_kind::data, format(line, field, msg)),
		  m_line(line), m_field(std::move(field)) {}

	std::size_t line() const noexcept { return m_line; }
	const std::string& field() const noexcept { return m_field; }

private:
	static std::string format(std::size_t line, const std::string& field, const std::string& msg) {
		std::string out = "line " + std::to_string(line);
		if (!field.empty()) {
			out += ", field '" + field + "'";
		}
		return out + ": " + msg;
	}

	std::size_t m_line;
	std::string m_field;
};

} // namespace provfsl
