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

// Test-only, straight-line restatement of the normalization rules under the
// default configuration, written without any of the library's helpers, plus
// a generator of mixed tokens to compare the two on.

#pragma once

#include <random>
#include <regex>
#include <string>
#include <vector>

namespace provfsl::oracle {

inline std::string reference_normalize(std::string t) {
	std::string path = t;
	for (auto& c : path) {
		if (c == '\\') c = '/';
	}
	std::string base = path;
	if (auto slash = path.rfind('/'); slash != std::string::npos) {
		base = path.substr(slash + 1);
	}

	// Rule 1: temporary directories or temporary file names.
	static const std::regex windows_user_temp("^C:/Users/[^/]*/AppData/Local/Temp/.*");
	if (path.rfind("/tmp/", 0) == 0 || path.rfind("/var/tmp/", 0) == 0 || path.rfind("C:/Windows/Temp/", 0) == 0 ||
	    std::regex_match(path, windows_user_temp)) {
		return "<TMP>";
	}
	if (base.rfind(".tmp", 0) == 0) {
		return "<TMP>";
	}
	if (base.size() > 4 && base.compare(base.size() - 4, 4, ".tmp") == 0) {
		return "<TMP>";
	}
	// Rule 2: OS internal state.
	if (path.rfind("/run/", 0) == 0 || path.rfind("/dev/", 0) == 0 || path.rfind("/proc/", 0) == 0 ||
	    path.rfind("/sys/", 0) == 0) {
		return "<TMP>";
	}
	// Rule 3: pipes.
	if (t == "pipe" || t.rfind("pipe:", 0) == 0) {
		return "<PIPE>";
	}
	// Rule 4: hash-like names, unless a well-known extension appears
	// anywhere in the dotted suffix chain.
	static const std::vector<std::string> stable{".conf", ".jar", ".so", ".log", ".txt", ".json", ".xml", ".yaml",
	                                             ".yml",  ".py",  ".sh", ".js",  ".html", ".css", ".service"};
	bool stable_name = false;
	static const std::regex suffix_re("\\.[^.]*");
	const std::string after_first = base.empty() ? base : base.substr(1);
	for (auto it = std::sregex_iterator(after_first.begin(), after_first.end(), suffix_re); it != std::sregex_iterator();
	     ++it) {
		for (const auto& s : stable) {
			if (it->str() == s) stable_name = true;
		}
	}
	if (!base.empty() && !stable_name) {
		static const std::regex uuid("^[0-9a-fA-F]{8}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{12}$");
		if (std::regex_match(base, uuid)) {
			return "<HASH>";
		}
		auto cls = [](char c) {
			if (std::isalpha(static_cast<unsigned char>(c))) return 0;
			if (std::isdigit(static_cast<unsigned char>(c))) return 1;
			return 2;
		};
		int kinds[3] = {0, 0, 0};
		int changes = 0;
		for (std::size_t i = 0; i < base.size(); ++i) {
			kinds[cls(base[i])] = 1;
			if (i > 0 && cls(base[i]) != cls(base[i - 1])) ++changes;
		}
		const int distinct = kinds[0] + kinds[1] + kinds[2];
		if (base.size() >= 16 && distinct >= 2 && changes * 4 >= static_cast<int>(base.size() - 1)) {
			return "<HASH>";
		}
	}
	return t;
}

/// Mixed corpus: temporary and state paths, pipes, UUID/MD5/SHA-like names,
/// stable file names, plus tokens that satisfy several rules at once.
inline std::vector<std::string> generate_token_corpus(std::size_t n, unsigned seed) {
	std::mt19937 gen(seed);
	auto pick = [&](const std::vector<std::string>& xs) { return xs[gen() % xs.size()]; };
	auto hex = [&](std::size_t len) {
		static const char* digits = "0123456789abcdef";
		std::string s;
		for (std::size_t i = 0; i < len; ++i) s += digits[gen() % 16];
		return s;
	};
	auto uuid = [&] { return hex(8) + "-" + hex(4) + "-" + hex(4) + "-" + hex(4) + "-" + hex(12); };
	auto alnum = [&](std::size_t len) {
		static const std::string chars = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-@$%";
		std::string s;
		for (std::size_t i = 0; i < len; ++i) s += chars[gen() % chars.size()];
		return s;
	};
	const std::vector<std::string> dirs{"/etc/", "/usr/lib/", "/var/lib/docker/", "/opt/app/", "/home/alice/",
	                                    "/tmp/", "/var/tmp/", "/proc/1234/", "/run/user/1000/", "/dev/", "/sys/fs/",
	                                    "C:\\Windows\\Temp\\", "C:\\Users\\bob\\AppData\\Local\\Temp\\", "",
	                                    "/var/log/", "/srv/www/"};
	const std::vector<std::string> stable{"passwd", "nginx.conf", "start.jar", "libssl.so.1.1", "syslog.log",
	                                      "notes.txt", "config.json", "pom.xml", "compose.yaml", "run.sh",
	                                      "index.html", "app.js", "ls", "bash", "hosts", "shadow",
	                                      "systemd-journald", "config.v2", "docker.service"};
	std::vector<std::string> out;
	out.reserve(n);
	while (out.size() < n) {
		const auto kind = gen() % 10;
		std::string tok;
		switch (kind) {
		case 0: tok = pick(dirs) + uuid(); break;
		case 1: tok = pick(dirs) + hex(32); break;
		case 2: tok = pick(dirs) + hex(40) + pick({".jar", ".log", ".bin", ""}); break;
		case 3: tok = "pipe:[" + std::to_string(gen() % 1000000) + "]"; break;
		case 4: tok = pick(dirs) + ".tmp-" + alnum(6 + gen() % 10); break;
		case 5: tok = pick(dirs) + alnum(4 + gen() % 24) + pick({".tmp", "", ".conf", ".so.2"}); break;
		case 6: tok = pick(dirs) + pick(stable); break;
		case 7: tok = pick({"<TMP>", "<PIPE>", "<HASH>", "<NA>", "pipe", "10.0.0.5:4444", "[::1]:8080"}); break;
		default: tok = pick(dirs) + alnum(16 + gen() % 16); break;
		}
		if (tok.empty()) continue;
		out.push_back(tok);
	}
	return out;
}

} // namespace provfsl::oracle
