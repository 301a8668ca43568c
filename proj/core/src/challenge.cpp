#include "rfp/challenge.hpp"

#include <sodium.h>

#include <limits>

#include "sodium_init.hpp"

namespace rfp {

RandomnessSource RandomnessSource::secure() {
  detail::ensure_sodium();
  return RandomnessSource();
}

RandomnessSource RandomnessSource::seeded(std::uint64_t seed) {
  RandomnessSource r;
  r.engine_.emplace(seed);
  return r;
}

std::uint64_t RandomnessSource::next_u64() {
  if (engine_) return (*engine_)();
  std::uint64_t v;
  randombytes_buf(&v, sizeof v);
  return v;
}

std::uint64_t RandomnessSource::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("empty range");
  // Reject the tail that would bias the modulo.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    std::uint64_t v = next_u64();
    if (v < limit) return v % bound;
  }
}

std::int64_t RandomnessSource::uniform(std::int64_t min, std::int64_t max) {
  if (min > max) throw std::invalid_argument("min exceeds max");
  auto span = static_cast<std::uint64_t>(max) - static_cast<std::uint64_t>(min);
  if (span == std::numeric_limits<std::uint64_t>::max()) return static_cast<std::int64_t>(next_u64());
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(min) + below(span + 1));
}

void RandomnessSource::fill(unsigned char* out, std::size_t n) {
  if (!engine_) {
    randombytes_buf(out, n);
    return;
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<unsigned char>((*engine_)() & 0xff);
}

namespace {

std::string random_text(std::uint32_t length, RandomnessSource& rng) {
  std::string out;
  out.reserve(length);
  for (std::uint32_t i = 0; i < length; ++i) out += kStringAlphabet[rng.below(kStringAlphabet.size())];
  return out;
}

}  // namespace

std::string draw(const VariableSpec& spec, RandomnessSource& rng, const VersionSet* family) {
  switch (spec.format) {
    case VariableFormat::integer:
      return std::to_string(rng.uniform(spec.min, spec.max));
    case VariableFormat::string:
      return random_text(spec.length, rng);
    case VariableFormat::binary: {
      static constexpr char kHex[] = "0123456789abcdef";
      std::string out;
      for (std::uint32_t i = 0; i < spec.length; ++i) {
        unsigned char b;
        rng.fill(&b, 1);
        out += kHex[b >> 4];
        out += kHex[b & 0xf];
      }
      return out;
    }
    case VariableFormat::version:
      if (!family || family->empty()) {
        throw std::invalid_argument("version variable '" + spec.name + "' needs a family");
      }
      return (*family)[rng.below(family->size())].raw();
    case VariableFormat::dir_file: {
      std::uint32_t n = spec.length ? spec.length : 8;
      return random_text(n, rng) + "/" + random_text(n, rng) + ".txt";
    }
  }
  return {};
}

Binding draw_binding(const VersionTest& test, RandomnessSource& rng, const VersionSet& family) {
  Binding b;
  for (const auto& [name, spec] : test.variables) b.emplace(name, draw(spec, rng, &family));
  return b;
}

RenderError::RenderError(std::string name)
    : std::runtime_error("unbound placeholder '#" + name + "#'"), name_(std::move(name)) {}

std::string render(std::string_view tmpl, const Binding& binding,
                   const std::set<std::string>& declared, const Wrap& wrap) {
  auto ident_char = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  };
  std::string out = wrap.prefix;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] != '#') {
      out += tmpl[i++];
      continue;
    }
    std::size_t j = i + 1;
    while (j < tmpl.size() && ident_char(tmpl[j])) ++j;
    if (j > i + 1 && j < tmpl.size() && tmpl[j] == '#') {
      std::string name(tmpl.substr(i + 1, j - i - 1));
      if (auto it = binding.find(name); it != binding.end()) {
        out += it->second;
        i = j + 1;
        continue;
      }
      if (declared.count(name)) throw RenderError(name);
    }
    out += tmpl[i++];
  }
  out += wrap.suffix;
  return out;
}

std::string render(std::string_view tmpl, const Binding& binding, const Wrap& wrap) {
  return render(tmpl, binding, {}, wrap);
}

std::string_view to_string(Reason reason) {
  switch (reason) {
    case Reason::none: return "none";
    case Reason::mismatch: return "mismatch";
    case Reason::timeout: return "timeout";
    case Reason::transport_error: return "transport-error";
  }
  return "unknown";
}

Judgement judge(const std::optional<std::string>& actual, std::string_view expected,
                std::chrono::microseconds elapsed, std::chrono::microseconds deadline,
                const Wrap& strip, Reason absent_reason) {
  if (!actual) return {false, absent_reason == Reason::none ? Reason::timeout : absent_reason};
  if (elapsed > deadline) return {false, Reason::timeout};
  std::string_view body = *actual;
  if (!strip.prefix.empty() && body.substr(0, strip.prefix.size()) == strip.prefix) {
    body.remove_prefix(strip.prefix.size());
  }
  if (!strip.suffix.empty() && body.size() >= strip.suffix.size() &&
      body.substr(body.size() - strip.suffix.size()) == strip.suffix) {
    body.remove_suffix(strip.suffix.size());
  }
  if (body != expected) return {false, Reason::mismatch};
  return {true, Reason::none};
}

RenderedTest render_test(const Database& db, const VersionTest& test, const Binding& binding) {
  if (!test.challenge_template) {
    throw std::invalid_argument("'" + test.version.raw() + "' has no intrinsic test");
  }
  std::set<std::string> declared;
  for (const auto& [name, spec] : test.variables) declared.insert(name);

  Wrap challenge_wrap;
  if (test.challenge_tags.start) challenge_wrap.prefix = db.challenge_start_tag();
  if (test.challenge_tags.end) challenge_wrap.suffix = db.challenge_end_tag();

  RenderedTest r;
  r.version = test.version;
  r.challenge_payload = render(*test.challenge_template, binding, declared, challenge_wrap);
  r.expected_payload = render(test.expect_template, binding, declared);
  r.deadline = test.wait_time;
  r.binding = binding;
  r.challenge_interface = db.meta().challenge_interface;
  r.response_interface = db.meta().response_interface;
  if (test.expect_tags.start) r.expect_strip.prefix = db.expect_start_tag();
  if (test.expect_tags.end) r.expect_strip.suffix = db.expect_end_tag();
  return r;
}

}  // namespace rfp
