#include "curafuse/corpus.hpp"

#include "curafuse/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <stdexcept>

namespace curafuse {

using json = nlohmann::json;

Label decode_label(int code) {
  if (code < 0 || code > 2) throw std::invalid_argument("label code out of range: " + std::to_string(code));
  return static_cast<Label>(code);
}

std::string_view label_name(Label l) noexcept {
  switch (l) {
    case Label::ProED: return "pro_ed";
    case Label::Neutral: return "neutral";
    case Label::ProRecovery: return "pro_recovery";
  }
  return "";
}

std::optional<Label> parse_label_name(std::string_view name) noexcept {
  for (Label l : kAllLabels)
    if (label_name(l) == name) return l;
  return std::nullopt;
}

namespace {

bool read_digits(std::string_view s, std::size_t& pos, std::size_t count, int& out) {
  if (pos + count > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  pos += count;
  out = v;
  return true;
}

bool expect(std::string_view s, std::size_t& pos, char c) {
  if (pos >= s.size() || s[pos] != c) return false;
  ++pos;
  return true;
}

}  // namespace

std::optional<Timestamp> parse_rfc3339(std::string_view s) noexcept {
  using namespace std::chrono;
  std::size_t pos = 0;
  int y, mo, d, h, mi, sec;
  if (!read_digits(s, pos, 4, y) || !expect(s, pos, '-') || !read_digits(s, pos, 2, mo) ||
      !expect(s, pos, '-') || !read_digits(s, pos, 2, d))
    return std::nullopt;
  if (pos >= s.size() || (s[pos] != 'T' && s[pos] != 't' && s[pos] != ' ')) return std::nullopt;
  ++pos;
  if (!read_digits(s, pos, 2, h) || !expect(s, pos, ':') || !read_digits(s, pos, 2, mi) ||
      !expect(s, pos, ':') || !read_digits(s, pos, 2, sec))
    return std::nullopt;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    if (pos == start) return std::nullopt;
  }
  int offset_minutes = 0;
  if (pos >= s.size()) return std::nullopt;
  if (s[pos] == 'Z' || s[pos] == 'z') {
    ++pos;
  } else if (s[pos] == '+' || s[pos] == '-') {
    const int sign = s[pos] == '+' ? 1 : -1;
    ++pos;
    int oh, om;
    if (!read_digits(s, pos, 2, oh) || !expect(s, pos, ':') || !read_digits(s, pos, 2, om))
      return std::nullopt;
    if (oh > 23 || om > 59) return std::nullopt;
    offset_minutes = sign * (oh * 60 + om);
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;
  if (h > 23 || mi > 59 || sec > 60) return std::nullopt;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  const Timestamp t = sys_days{ymd} + hours{h} + minutes{mi} + seconds{std::min(sec, 59)} -
                      minutes{offset_minutes};
  const year_month_day utc{floor<days>(t)};
  if (utc.year() < year{1970} || utc.year() >= year{2100}) return std::nullopt;
  return t;
}

std::string format_rfc3339(Timestamp t) {
  using namespace std::chrono;
  const auto dp = floor<days>(t);
  const year_month_day ymd{dp};
  const hh_mm_ss hms{t - dp};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

namespace {

std::optional<Post> parse_post(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) return std::nullopt;
  auto str_field = [&](const char* key) -> const std::string* {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) return nullptr;
    return it->get_ptr<const std::string*>();
  };
  const std::string* id = str_field("id");
  const std::string* posted_at = str_field("posted_at");
  const std::string* source = str_field("source");
  const std::string* text = str_field("text");
  if (!id || id->empty() || !posted_at || !source || !text) return std::nullopt;

  Post p;
  p.id = *id;
  const auto ts = parse_rfc3339(*posted_at);
  if (!ts) return std::nullopt;
  p.posted_at = *ts;
  p.source = *source;
  p.text = *text;

  if (auto it = j.find("image_path"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) return std::nullopt;
    std::filesystem::path img = it->get<std::string>();
    if (img.is_relative() && !base_dir.empty()) img = base_dir / img;
    p.image = ImageRef{img.lexically_normal()};
  }
  if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) return std::nullopt;
    p.label = parse_label_name(it->get<std::string>());
    if (!p.label) return std::nullopt;
  }
  return p;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; });
}

}  // namespace

LoadResult parse_posts_jsonl(std::string_view contents, const std::filesystem::path& base_dir) {
  LoadResult result;
  std::size_t start = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    const std::string_view line = contents.substr(start, end - start);
    start = end + 1;
    if (is_blank(line)) continue;
    const json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) {
      ++result.skipped;
      continue;
    }
    if (auto post = parse_post(j, base_dir)) {
      result.dataset.posts.push_back(std::move(*post));
    } else {
      ++result.skipped;
    }
  }
  return result;
}

LoadResult load_posts(const std::filesystem::path& path) {
  const std::string contents = read_file(path);
  const auto base = std::filesystem::absolute(path).parent_path();
  LoadResult r = parse_posts_jsonl(contents, base);
  r.dataset.provenance = path.string();
  return r;
}

std::string to_jsonl(const Dataset& d) {
  std::string out;
  for (const Post& p : d.posts) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["posted_at"] = format_rfc3339(p.posted_at);
    j["source"] = p.source;
    j["text"] = p.text;
    const auto* path = p.image ? std::get_if<std::filesystem::path>(&*p.image) : nullptr;
    j["image_path"] = path ? nlohmann::ordered_json(path->string()) : nullptr;
    j["label"] = p.label ? nlohmann::ordered_json(std::string(label_name(*p.label))) : nullptr;
    out += j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool istarts_with(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  return true;
}

// scheme "://" where scheme = ALPHA *( ALPHA / DIGIT / "+" / "-" / "." )
bool has_url_scheme(std::string_view tok) {
  const std::size_t sep = tok.find("://");
  if (sep == std::string_view::npos || sep == 0) return false;
  if (!std::isalpha(static_cast<unsigned char>(tok[0]))) return false;
  for (std::size_t i = 1; i < sep; ++i) {
    const unsigned char c = tok[i];
    if (!std::isalnum(c) && c != '+' && c != '-' && c != '.') return false;
  }
  return true;
}

bool is_removed_token(std::string_view tok) {
  if (tok.front() == '@' || tok.front() == '#') return true;
  if (has_url_scheme(tok)) return true;
  return istarts_with(tok, "t.co/") || istarts_with(tok, "www.");
}

}  // namespace

std::string sanitize_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    while (i < raw.size() && is_space(raw[i])) ++i;
    const std::size_t start = i;
    while (i < raw.size() && !is_space(raw[i])) ++i;
    if (i == start) break;
    const std::string_view tok = raw.substr(start, i - start);
    if (is_removed_token(tok)) continue;
    if (!out.empty()) out += ' ';
    out.append(tok);
  }
  return out;
}

std::string case_fold(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

FilterResult filter_multimodal(const Dataset& d) {
  enum class Verdict { Keep, NoText, NoImage, Undecodable };
  std::vector<Verdict> verdicts(d.posts.size());
  parallel_for(d.posts.size(), [&](std::size_t i) {
    const Post& p = d.posts[i];
    if (sanitize_text(p.text).empty()) {
      verdicts[i] = Verdict::NoText;
    } else if (!p.image) {
      verdicts[i] = Verdict::NoImage;
    } else {
      try {
        decode_image(*p.image);
        verdicts[i] = Verdict::Keep;
      } catch (const ImageDecodeError&) {
        verdicts[i] = Verdict::Undecodable;
      }
    }
  });
  FilterResult r;
  r.dataset.provenance = d.provenance;
  for (std::size_t i = 0; i < d.posts.size(); ++i) {
    switch (verdicts[i]) {
      case Verdict::Keep: r.dataset.posts.push_back(d.posts[i]); break;
      case Verdict::NoText: ++r.missing_text; break;
      case Verdict::NoImage: ++r.missing_image; break;
      case Verdict::Undecodable: ++r.undecodable_image; break;
    }
  }
  return r;
}

Dataset sanitize_dataset(const Dataset& d) {
  Dataset out = d;
  for (Post& p : out.posts) p.text = sanitize_text(p.text);
  return out;
}

}  // namespace curafuse
