#include "lookahead/json_canon.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace lookahead {

namespace {

std::string format_double(double v) {
  if (!std::isfinite(v)) {
    throw std::invalid_argument("canonical JSON cannot represent non-finite number");
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void dump_value(const nlohmann::json& v, std::string& out, int indent, int depth) {
  using value_t = nlohmann::json::value_t;
  switch (v.type()) {
    case value_t::null:
      out += "null";
      break;
    case value_t::boolean:
      out += v.get<bool>() ? "true" : "false";
      break;
    case value_t::number_integer:
      out += std::to_string(v.get<std::int64_t>());
      break;
    case value_t::number_unsigned:
      out += std::to_string(v.get<std::uint64_t>());
      break;
    case value_t::number_float:
      out += format_double(v.get<double>());
      break;
    case value_t::string:
      out += nlohmann::json(v.get<std::string>()).dump();
      break;
    case value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& item : v) {
        if (!first) out += indent >= 0 ? ", " : ",";
        first = false;
        dump_value(item, out, -1, depth + 1);
      }
      out += ']';
      break;
    }
    case value_t::object: {
      if (v.empty()) {
        out += "{}";
        break;
      }
      out += '{';
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ',';
        first = false;
        if (indent >= 0) {
          out += '\n';
          out.append(static_cast<std::size_t>(indent) * (depth + 1), ' ');
        }
        out += nlohmann::json(it.key()).dump();
        out += indent >= 0 ? ": " : ":";
        dump_value(it.value(), out, indent, depth + 1);
      }
      if (indent >= 0) {
        out += '\n';
        out.append(static_cast<std::size_t>(indent) * depth, ' ');
      }
      out += '}';
      break;
    }
    default:
      throw std::invalid_argument("unsupported JSON value type");
  }
}

}  // namespace

std::string canonical_dump(const nlohmann::json& value, int indent) {
  std::string out;
  dump_value(value, out, indent, 0);
  out += '\n';
  return out;
}

std::string canonical_dump_compact(const nlohmann::json& value) {
  std::string out;
  dump_value(value, out, -1, 0);
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("cannot open for reading: " + path.string());
  }
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return text;
}

std::uint64_t hash_file(const std::filesystem::path& path) {
  const std::string bytes = read_text_file(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace lookahead
