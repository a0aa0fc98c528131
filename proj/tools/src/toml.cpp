#include "fblab/cli/toml.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "fblab/error.hpp"

namespace fblab::cli {

using nlohmann::json;

namespace {

class Parser {
 public:
  Parser(std::string text) : s_(std::move(text)) {}

  json run() {
    json root = json::object();
    json* table = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        if (peek() == '[') error("arrays of tables are not supported");
        const auto path = key_path();
        skip_ws();
        expect(']');
        table = &descend(root, path, true);
      } else {
        const auto path = key_path();
        skip_ws();
        expect('=');
        skip_ws();
        json v = value();
        json& parent = descend(*table, {path.begin(), path.end() - 1}, false);
        if (parent.contains(path.back())) error("duplicate key '" + path.back() + "'");
        parent[path.back()] = std::move(v);
      }
      end_of_line();
    }
    return root;
  }

 private:
  std::string s_;
  std::size_t pos_ = 0;
  int line_ = 1;

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }

  [[noreturn]] void error(const std::string& msg) const {
    fail(ErrorCode::ConfigError, "config line " + std::to_string(line_) + ": " + msg);
  }

  void expect(char c) {
    if (peek() != c) error(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_ws() {
    while (peek() == ' ' || peek() == '\t') ++pos_;
  }

  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }

  void skip_blank_lines() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\r') ++pos_;
      if (peek() != '\n') return;
      ++pos_;
      ++line_;
    }
  }

  // Whitespace, comments and newlines inside arrays and inline tables.
  void skip_all() {
    while (true) {
      skip_ws();
      skip_comment();
      if (peek() == '\r') {
        ++pos_;
      } else if (peek() == '\n') {
        ++pos_;
        ++line_;
      } else {
        return;
      }
    }
  }

  void end_of_line() {
    skip_ws();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (eof()) return;
    if (peek() != '\n') error("unexpected trailing characters");
    ++pos_;
    ++line_;
  }

  std::string bare_or_quoted_key() {
    skip_ws();
    if (peek() == '"') return basic_string();
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
    if (pos_ == start) error("expected a key");
    return s_.substr(start, pos_ - start);
  }

  std::vector<std::string> key_path() {
    std::vector<std::string> path{bare_or_quoted_key()};
    skip_ws();
    while (peek() == '.') {
      ++pos_;
      path.push_back(bare_or_quoted_key());
      skip_ws();
    }
    return path;
  }

  json& descend(json& from, const std::vector<std::string>& path, bool header) {
    json* cur = &from;
    for (const auto& k : path) {
      json& next = (*cur)[k];
      if (next.is_null()) next = json::object();
      if (!next.is_object()) error(header ? "table '" + k + "' redefines a value" : "key '" + k + "' is not a table");
      cur = &next;
    }
    return *cur;
  }

  std::string basic_string() {
    expect('"');
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') error("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      const char e = s_[pos_++];
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: error(std::string("unsupported escape \\") + e);
      }
    }
  }

  json number() {
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                      peek() == '.' || peek() == '_'))
      ++pos_;
    std::string tok = s_.substr(start, pos_ - start);
    std::erase(tok, '_');
    if (tok == "inf" || tok == "+inf" || tok == "-inf" || tok == "nan") error("non-finite numbers are not allowed");
    const bool is_float = tok.find_first_of(".eE") != std::string::npos;
    const char* b = tok.data();
    const char* e = tok.data() + tok.size();
    if (!tok.empty() && *b == '+') ++b;
    if (is_float) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(b, e, v);
      if (ec != std::errc() || p != e) error("malformed number '" + tok + "'");
      return v;
    }
    long long v = 0;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) error("malformed value '" + tok + "'");
    return v;
  }

  json value() {
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') error("literal strings are not supported");
    if (c == '[') {
      ++pos_;
      json arr = json::array();
      skip_all();
      while (peek() != ']') {
        arr.push_back(value());
        skip_all();
        if (peek() == ',') {
          ++pos_;
          skip_all();
        } else if (peek() != ']') {
          error("expected ',' or ']' in array");
        }
      }
      ++pos_;
      return arr;
    }
    if (c == '{') {
      ++pos_;
      json obj = json::object();
      skip_ws();
      while (peek() != '}') {
        const auto path = key_path();
        skip_ws();
        expect('=');
        skip_ws();
        json& parent = descend(obj, {path.begin(), path.end() - 1}, false);
        if (parent.contains(path.back())) error("duplicate key '" + path.back() + "'");
        parent[path.back()] = value();
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          skip_ws();
        } else if (peek() != '}') {
          error("expected ',' or '}' in inline table");
        }
      }
      ++pos_;
      return obj;
    }
    if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      return true;
    }
    if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      return false;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') return number();
    error("expected a value");
  }
};

}  // namespace

json parse_toml(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return Parser(ss.str()).run();
}

json parse_toml_string(const std::string& text) { return Parser(text).run(); }

json parse_toml_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot open config file '" + path + "'");
  return parse_toml(in);
}

}  // namespace fblab::cli
