// Text checkpoint format, version 1:
//
//   driftsgd-optimizer-checkpoint 1
//   method <sgd_online|momentum|sts_sgd|dts_sgd|sgd_offline>
//   step <n>
//   x <d> <v_1> ... <v_d>
//   velocity <d> ...                       (momentum)
//   window <w>                             (sts_sgd)
//   retained <k> <s_1> ... <s_k>           (sts_sgd)
//   history <w> <alpha> <k>                (dts_sgd), followed by k lines
//   entry <step> <d> <g_1> ... <g_d>

#include <charconv>
#include <istream>
#include <ostream>
#include <string>

#include "driftsgd/errors.hpp"
#include "driftsgd/optim.hpp"

namespace driftsgd::optim {

namespace {

constexpr const char* kMagic = "driftsgd-optimizer-checkpoint";
constexpr int kVersion = 1;

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void write_vector(std::ostream& out, const Vector& v) {
  out << v.size();
  for (double d : v) out << ' ' << format_double(d);
}

double parse_double(const std::string& token) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || p != token.data() + token.size())
    throw FormatError(0, "bad number '" + token + "' in checkpoint");
  return v;
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw FormatError(0, "checkpoint truncated");
    return w;
  }

  void expect(const std::string& keyword) {
    const std::string w = word();
    if (w != keyword) throw FormatError(0, "expected '" + keyword + "' in checkpoint, got '" + w + "'");
  }

  long integer() {
    const std::string w = word();
    long v = 0;
    auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc() || p != w.data() + w.size())
      throw FormatError(0, "bad integer '" + w + "' in checkpoint");
    return v;
  }

  double real() { return parse_double(word()); }

  Vector vector() {
    const long n = integer();
    if (n < 0) throw FormatError(0, "negative length in checkpoint");
    Vector v(static_cast<std::size_t>(n));
    for (double& d : v) d = real();
    return v;
  }

 private:
  std::istream& in_;
};

}  // namespace

void save_checkpoint(std::ostream& out, const OptimizerState& state) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "method " << to_string(state.method()) << '\n';
  out << "step " << state.step << '\n';
  out << "x ";
  write_vector(out, state.x);
  out << '\n';
  if (const auto* m = std::get_if<MomentumPayload>(&state.payload)) {
    out << "velocity ";
    write_vector(out, m->velocity);
    out << '\n';
  } else if (const auto* s = std::get_if<StsPayload>(&state.payload)) {
    out << "window " << s->window << '\n' << "retained " << s->retained.size();
    for (long r : s->retained) out << ' ' << r;
    out << '\n';
  } else if (const auto* d = std::get_if<DtsPayload>(&state.payload)) {
    const auto entries = d->history.entries();
    out << "history " << d->history.capacity() << ' ' << format_double(d->history.alpha()) << ' '
        << entries.size() << '\n';
    for (const auto& e : entries) {
      out << "entry " << e.step << ' ';
      write_vector(out, e.gradient);
      out << '\n';
    }
  }
  if (!out) throw IoError("failed to write checkpoint");
}

OptimizerState load_checkpoint(std::istream& in) {
  Reader r(in);
  r.expect(kMagic);
  if (r.integer() != kVersion) throw FormatError(1, "unsupported checkpoint version");
  r.expect("method");
  const Method method = parse_method(r.word());
  r.expect("step");
  const long step = r.integer();
  r.expect("x");
  Vector x = r.vector();

  OptimizerState state;
  switch (method) {
    case Method::sgd: state = make_sgd_state(std::move(x)); break;
    case Method::offline: state = {std::move(x), 0, OfflinePayload{}}; break;
    case Method::momentum: {
      state = make_momentum_state(std::move(x));
      r.expect("velocity");
      std::get<MomentumPayload>(state.payload).velocity = r.vector();
      break;
    }
    case Method::sts: {
      r.expect("window");
      state = make_sts_state(std::move(x), static_cast<std::size_t>(r.integer()));
      r.expect("retained");
      const long k = r.integer();
      auto& retained = std::get<StsPayload>(state.payload).retained;
      for (long i = 0; i < k; ++i) retained.push_back(r.integer());
      break;
    }
    case Method::dts: {
      r.expect("history");
      const long w = r.integer();
      const double alpha = r.real();
      const long k = r.integer();
      state = make_dts_state(std::move(x), static_cast<std::size_t>(w), alpha);
      auto& history = std::get<DtsPayload>(state.payload).history;
      for (long i = 0; i < k; ++i) {
        r.expect("entry");
        const long s = r.integer();
        history.push(s, r.vector());
      }
      break;
    }
  }
  state.step = step;
  return state;
}

}  // namespace driftsgd::optim
