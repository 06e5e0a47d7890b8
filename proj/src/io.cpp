#include "phgnn/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "phgnn/error.hpp"

namespace fs = std::filesystem;

namespace phgnn::io {

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) fail(ErrorKind::Runtime, "format_double: conversion failed");
    return std::string(buf, end);
}

double parse_double(std::string_view token, const std::string& context) {
    while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
    while (!token.empty() && (token.back() == ' ' || token.back() == '\t' || token.back() == '\r')) token.remove_suffix(1);
    double v = 0.0;
    auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || end != token.data() + token.size())
        fail(ErrorKind::Io, context + ": cannot parse '" + std::string(token) + "' as a number");
    if (!std::isfinite(v)) fail(ErrorKind::Io, context + ": non-finite value '" + std::string(token) + "'");
    return v;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, path.string() + ": cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Io, tmp.string() + ": cannot open for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) fail(ErrorKind::Io, tmp.string() + ": write failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        fail(ErrorKind::Io, path.string() + ": " + ec.message());
    }
}

fs::path staging_directory(const fs::path& target) {
    fs::path parent = target.parent_path();
    if (parent.empty()) parent = ".";
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec) fail(ErrorKind::Io, parent.string() + ": " + ec.message());
    const std::string base = target.filename().string();
    for (int attempt = 0; attempt < 1000; ++attempt) {
        fs::path candidate = parent / ("." + base + ".staging." + std::to_string(::getpid()) + "." + std::to_string(attempt));
        if (fs::create_directory(candidate, ec)) return candidate;
    }
    fail(ErrorKind::Io, target.string() + ": cannot create staging directory");
}

void commit_directory(const fs::path& staged, const fs::path& target, bool force) {
    std::error_code ec;
    if (fs::exists(target)) {
        if (!force) {
            fs::remove_all(staged, ec);
            fail(ErrorKind::InvalidArgument, target.string() + ": already exists (use --force to replace)");
        }
        const fs::path old = staged.string() + ".old";
        fs::rename(target, old, ec);
        if (ec) fail(ErrorKind::Io, target.string() + ": " + ec.message());
        fs::rename(staged, target, ec);
        if (ec) {
            fs::rename(old, target);
            fail(ErrorKind::Io, target.string() + ": " + ec.message());
        }
        fs::remove_all(old, ec);
        return;
    }
    fs::rename(staged, target, ec);
    if (ec) fail(ErrorKind::Io, target.string() + ": " + ec.message());
}

}  // namespace phgnn::io
