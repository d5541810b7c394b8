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

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace provfsl {

/// splitmix64 finalizer, used to spread seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
	x += 0x9e3779b97f4a7c15ULL;
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
	return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
	std::uint64_t h = 0xcbf29ce484222325ULL;
	for (unsigned char c : s) {
		h ^= c;
		h *= 0x100000001b3ULL;
	}
	return h;
}

/// Seed of the named sub-stream `name` under `root`. Every stochastic stage
/// draws from its own stream so adding a stage never perturbs another.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view name) noexcept {
	return mix64(root ^ mix64(fnv1a(name)));
}

/// Deterministic random source. std distributions are implementation
/// defined, so the sampling helpers are written out here.
class rng {
public:
	explicit rng(std::uint64_t seed) : m_engine(mix64(seed)), m_origin(seed) {}

	/// Independent stream keyed by name. Depends on the construction seed
	/// only, not on how much has been drawn since.
	rng substream(std::string_view name) const { return rng(derive_seed(m_origin, name)); }

	std::uint64_t next_u64() { return m_engine(); }

	/// Uniform integer in [0, n). n must be positive.
	std::uint64_t below(std::uint64_t n) {
		const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
		std::uint64_t x;
		do {
			x = m_engine();
		} while (x >= limit);
		return x % n;
	}

	/// Uniform real in [0, 1).
	double uniform() { return static_cast<double>(m_engine() >> 11) * 0x1.0p-53; }

	double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

	/// Standard normal via Box-Muller.
	double normal() {
		if (m_has_spare) {
			m_has_spare = false;
			return m_spare;
		}
		double u1 = uniform();
		while (u1 <= 0.0) {
			u1 = uniform();
		}
		const double u2 = uniform();
		const double r = std::sqrt(-2.0 * std::log(u1));
		const double t = 2.0 * std::numbers::pi * u2;
		m_spare = r * std::sin(t);
		m_has_spare = true;
		return r * std::cos(t);
	}

	bool chance(double p) { return uniform() < p; }

	template <typename T>
	const T& pick(const std::vector<T>& items) {
		return items[below(items.size())];
	}

	/// Fisher-Yates.
	template <typename T>
	void shuffle(std::vector<T>& items) {
		for (std::size_t i = items.size(); i > 1; --i) {
			std::swap(items[i - 1], items[below(i)]);
		}
	}

private:
	std::mt19937_64 m_engine;
	std::uint64_t m_origin;
	double m_spare = 0.0;
	bool m_has_spare = false;
};

} // namespace provfsl
