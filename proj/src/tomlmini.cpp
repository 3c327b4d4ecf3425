#include "steklab/tomlmini.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace steklab::toml {

namespace {

[[noreturn]] void bad(int line, const std::string& msg) {
  fail(ErrorKind::Config, "toml line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool is_bare_key(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
      return false;
  }
  return true;
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_str) {
      if (c == '\\' && i + 1 < s.size())
        ++i;
      else if (c == '"')
        in_str = false;
    } else if (c == '"') {
      in_str = true;
    } else if (c == '#') {
      return s.substr(0, i);
    }
  }
  return s;
}

std::string parse_string_literal(const std::string& s, int line) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') bad(line, "malformed string");
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    char c = s[i];
    if (c == '"') bad(line, "unescaped quote inside string");
    if (c == '\\') {
      if (i + 2 >= s.size() + 1) bad(line, "dangling escape");
      ++i;
      switch (s[i]) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default: bad(line, "unsupported escape");
      }
    } else {
      out += c;
    }
  }
  return out;
}

bool looks_like_int(const std::string& s) {
  std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  if (i >= s.size()) return false;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '_') continue;
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

std::string drop_underscores(const std::string& s) {
  std::string out;
  for (char c : s)
    if (c != '_') out += c;
  return out;
}

Value parse_scalar(const std::string& raw, int line);

std::vector<std::string> split_array_items(const std::string& inner, int line) {
  std::vector<std::string> items;
  std::string cur;
  bool in_str = false;
  for (std::size_t i = 0; i < inner.size(); ++i) {
    const char c = inner[i];
    if (in_str) {
      cur += c;
      if (c == '\\' && i + 1 < inner.size())
        cur += inner[++i];
      else if (c == '"')
        in_str = false;
    } else if (c == '"') {
      cur += c;
      in_str = true;
    } else if (c == ',') {
      items.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (in_str) bad(line, "unterminated string in array");
  if (!trim(cur).empty()) items.push_back(cur);
  return items;
}

Value parse_value(const std::string& raw, int line) {
  const std::string s = trim(raw);
  if (s.empty()) bad(line, "missing value");
  if (s.front() == '[') {
    if (s.back() != ']') bad(line, "array must close on the same line");
    Value v;
    v.kind = Value::Kind::Array;
    for (const std::string& item : split_array_items(s.substr(1, s.size() - 2), line)) {
      const std::string t = trim(item);
      if (t.empty()) bad(line, "empty array element");
      v.arr.push_back(parse_scalar(t, line));
    }
    return v;
  }
  return parse_scalar(s, line);
}

Value parse_scalar(const std::string& s, int line) {
  Value v;
  if (s.front() == '"') {
    v.kind = Value::Kind::String;
    v.s = parse_string_literal(s, line);
    return v;
  }
  if (s == "true" || s == "false") {
    v.kind = Value::Kind::Bool;
    v.b = (s == "true");
    return v;
  }
  if (looks_like_int(s)) {
    v.kind = Value::Kind::Int;
    errno = 0;
    char* end = nullptr;
    const std::string t = drop_underscores(s);
    v.i = std::strtoll(t.c_str(), &end, 10);
    if (errno != 0 || end == t.c_str() || *end != '\0') bad(line, "bad integer '" + s + "'");
    return v;
  }
  v.kind = Value::Kind::Float;
  errno = 0;
  char* end = nullptr;
  const std::string t = drop_underscores(s);
  v.d = std::strtod(t.c_str(), &end);
  if (errno != 0 || end == t.c_str() || *end != '\0') bad(line, "bad value '" + s + "'");
  return v;
}

const char* kind_name(Value::Kind k) {
  switch (k) {
    case Value::Kind::Int: return "integer";
    case Value::Kind::Float: return "float";
    case Value::Kind::Bool: return "bool";
    case Value::Kind::String: return "string";
    case Value::Kind::Array: return "array";
  }
  return "?";
}

}  // namespace

Table parse(const std::string& text) {
  Table table;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') bad(lineno, "malformed section header");
      section = trim(body.substr(1, body.size() - 2));
      if (!is_bare_key(section)) bad(lineno, "malformed section name");
      continue;
    }
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) bad(lineno, "expected key = value");
    const std::string key = trim(body.substr(0, eq));
    if (!is_bare_key(key)) bad(lineno, "malformed key '" + key + "'");
    const std::string full = section.empty() ? key : section + "." + key;
    if (table.has(full)) bad(lineno, "duplicate key '" + full + "'");
    table.set(full, parse_value(body.substr(eq + 1), lineno));
  }
  return table;
}

Table parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const Value& Table::at(const std::string& key) const {
  auto it = map_.find(key);
  if (it == map_.end()) fail(ErrorKind::Config, "missing config key '" + key + "'");
  return it->second;
}

std::int64_t Table::get_int(const std::string& key) const {
  const Value& v = at(key);
  if (v.kind != Value::Kind::Int)
    fail(ErrorKind::Config, "key '" + key + "' is " + kind_name(v.kind) + ", expected integer");
  return v.i;
}

double Table::get_double(const std::string& key) const {
  const Value& v = at(key);
  if (v.kind == Value::Kind::Int) return static_cast<double>(v.i);
  if (v.kind != Value::Kind::Float)
    fail(ErrorKind::Config, "key '" + key + "' is " + kind_name(v.kind) + ", expected float");
  return v.d;
}

bool Table::get_bool(const std::string& key) const {
  const Value& v = at(key);
  if (v.kind != Value::Kind::Bool)
    fail(ErrorKind::Config, "key '" + key + "' is " + kind_name(v.kind) + ", expected bool");
  return v.b;
}

std::string Table::get_string(const std::string& key) const {
  const Value& v = at(key);
  if (v.kind != Value::Kind::String)
    fail(ErrorKind::Config, "key '" + key + "' is " + kind_name(v.kind) + ", expected string");
  return v.s;
}

std::vector<std::int64_t> Table::get_int_array(const std::string& key) const {
  const Value& v = at(key);
  if (v.kind != Value::Kind::Array)
    fail(ErrorKind::Config, "key '" + key + "' is " + kind_name(v.kind) + ", expected array");
  std::vector<std::int64_t> out;
  for (const Value& e : v.arr) {
    if (e.kind != Value::Kind::Int)
      fail(ErrorKind::Config, "key '" + key + "' has a non-integer element");
    out.push_back(e.i);
  }
  return out;
}

std::vector<double> Table::get_double_array(const std::string& key) const {
  const Value& v = at(key);
  if (v.kind != Value::Kind::Array)
    fail(ErrorKind::Config, "key '" + key + "' is " + kind_name(v.kind) + ", expected array");
  std::vector<double> out;
  for (const Value& e : v.arr) {
    if (e.kind == Value::Kind::Int)
      out.push_back(static_cast<double>(e.i));
    else if (e.kind == Value::Kind::Float)
      out.push_back(e.d);
    else
      fail(ErrorKind::Config, "key '" + key + "' has a non-numeric element");
  }
  return out;
}

std::int64_t Table::get_int_or(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}
double Table::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}
bool Table::get_bool_or(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}
std::string Table::get_string_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

std::vector<std::string> Table::keys() const {
  std::vector<std::string> out;
  out.reserve(map_.size());
  for (const auto& kv : map_) out.push_back(kv.first);
  return out;
}

}  // namespace steklab::toml
