#pragma once

// Trade tapes: parsing, the exchange session calendar, and extraction of
// intertrade duration series per stock and trade class.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "durascale/errors.hpp"
#include "durascale/format.hpp"

namespace durascale {

/// Time of day in integer centiseconds, the native resolution of the tapes.
/// Durations are differences of these and therefore exact.
using Centis = std::int64_t;

inline constexpr Centis kCentisPerSecond = 100;
inline constexpr Centis kCentisPerDay = 24 * 3600 * kCentisPerSecond;

constexpr Centis hms(int h, int m, int s = 0, int cs = 0) {
  return ((static_cast<Centis>(h) * 60 + m) * 60 + s) * kCentisPerSecond + cs;
}

inline double to_seconds(Centis c) { return static_cast<double>(c) / 100.0; }

enum class TradeClass { Filled, PartiallyFilled };

enum class ClassFilter { All, Filled, PartiallyFilled };

inline bool matches(ClassFilter f, TradeClass c) {
  switch (f) {
  case ClassFilter::All:
    return true;
  case ClassFilter::Filled:
    return c == TradeClass::Filled;
  case ClassFilter::PartiallyFilled:
    return c == TradeClass::PartiallyFilled;
  }
  return false;
}

inline std::string_view to_string(ClassFilter f) {
  switch (f) {
  case ClassFilter::All:
    return "all";
  case ClassFilter::Filled:
    return "filled";
  case ClassFilter::PartiallyFilled:
    return "partial";
  }
  return "?";
}

inline std::optional<ClassFilter> parse_class_filter(std::string_view s) {
  if (s == "all")
    return ClassFilter::All;
  if (s == "filled")
    return ClassFilter::Filled;
  if (s == "partial")
    return ClassFilter::PartiallyFilled;
  return std::nullopt;
}

struct TradeRecord {
  std::string stock_code;
  std::chrono::year_month_day trade_date;
  Centis timestamp = 0;
  TradeClass trade_class = TradeClass::Filled;
};

struct TradeTape {
  std::vector<TradeRecord> records;
};

struct Session {
  Centis open;
  Centis close;
};

/// Ordered, disjoint trading windows within one day. A trade belongs to a
/// session when open <= t <= close.
class SessionCalendar {
public:
  /// Morning and afternoon continuous double auction, 9:30-11:30 and
  /// 13:00-15:00. The opening call auction and cooling period are outside.
  SessionCalendar()
      : SessionCalendar({{hms(9, 30), hms(11, 30)}, {hms(13, 0), hms(15, 0)}}) {}

  explicit SessionCalendar(std::vector<Session> sessions)
      : sessions_(std::move(sessions)) {
    if (sessions_.empty())
      throw DomainError("session calendar is empty");
    for (std::size_t i = 0; i < sessions_.size(); ++i) {
      const auto &s = sessions_[i];
      if (s.open < 0 || s.close > kCentisPerDay || s.open >= s.close)
        throw DomainError("invalid session window #" + std::to_string(i));
      if (i > 0 && sessions_[i - 1].close >= s.open)
        throw DomainError("sessions must be disjoint and ordered");
    }
  }

  const std::vector<Session> &sessions() const noexcept { return sessions_; }

  /// Index of the session containing t, if any.
  std::optional<std::size_t> session_of(Centis t) const {
    for (std::size_t i = 0; i < sessions_.size(); ++i)
      if (t >= sessions_[i].open && t <= sessions_[i].close)
        return i;
    return std::nullopt;
  }

  Centis longest_session() const {
    Centis best = 0;
    for (const auto &s : sessions_)
      best = std::max(best, s.close - s.open);
    return best;
  }

private:
  std::vector<Session> sessions_;
};

/// Intertrade durations of one stock and one trade class. Durations are kept
/// in centiseconds; `session_starts[k]` is the index of the first duration of
/// the k-th session that contributed any.
struct DurationSeries {
  std::string stock_code;
  ClassFilter trade_class_filter = ClassFilter::All;
  std::vector<Centis> durations;
  std::vector<std::size_t> session_starts;
  std::size_t zero_count = 0;
  std::size_t n_trades = 0;

  std::vector<double> seconds() const {
    std::vector<double> out(durations.size());
    std::transform(durations.begin(), durations.end(), out.begin(), to_seconds);
    return out;
  }

  /// Half-open [begin, end) index range of session run k.
  std::pair<std::size_t, std::size_t> session_range(std::size_t k) const {
    const std::size_t end =
        k + 1 < session_starts.size() ? session_starts[k + 1] : durations.size();
    return {session_starts[k], end};
  }
};

// ---------------------------------------------------------------------------
// Text formats

namespace detail {

inline bool parse_uint(std::string_view s, int &out) {
  if (s.empty())
    return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

} // namespace detail

/// Parses `H:MM:SS[.c[c]]` into centiseconds. Extra fractional digits are
/// accepted only when zero, so "09:30:00.005" is rejected.
inline std::optional<Centis> parse_time(std::string_view s) {
  const auto c1 = s.find(':');
  if (c1 == std::string_view::npos)
    return std::nullopt;
  const auto c2 = s.find(':', c1 + 1);
  if (c2 == std::string_view::npos)
    return std::nullopt;
  const auto hh = s.substr(0, c1);
  const auto mm = s.substr(c1 + 1, c2 - c1 - 1);
  auto rest = s.substr(c2 + 1);
  std::string_view ss = rest, frac;
  // std::find rather than string_view::find: GCC 11 emits a bogus
  // -Wstringop-overread for the latter here.
  if (const auto it = std::find(rest.begin(), rest.end(), '.'); it != rest.end()) {
    const auto dot = static_cast<std::size_t>(it - rest.begin());
    ss = rest.substr(0, dot);
    frac = rest.substr(dot + 1);
    if (frac.empty())
      return std::nullopt;
  }
  int h = 0, m = 0, sec = 0;
  if (hh.size() > 2 || mm.size() != 2 || ss.size() != 2)
    return std::nullopt;
  if (!detail::parse_uint(hh, h) || !detail::parse_uint(mm, m) ||
      !detail::parse_uint(ss, sec))
    return std::nullopt;
  if (h > 23 || m > 59 || sec > 59)
    return std::nullopt;
  int cs = 0;
  for (std::size_t i = 0; i < frac.size(); ++i) {
    const char ch = frac[i];
    if (ch < '0' || ch > '9')
      return std::nullopt;
    if (i < 2)
      cs = cs * 10 + (ch - '0');
    else if (ch != '0')
      return std::nullopt;
  }
  if (frac.size() == 1)
    cs *= 10;
  return hms(h, m, sec, cs);
}

inline std::string format_time(Centis t) {
  char buf[64];
  const auto cs = t % 100;
  const auto s = (t / 100) % 60;
  const auto m = (t / 6000) % 60;
  const auto h = t / 360000;
  std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld.%02lld",
                static_cast<long long>(h), static_cast<long long>(m),
                static_cast<long long>(s), static_cast<long long>(cs));
  return buf;
}

/// ISO `YYYY-MM-DD`.
inline std::optional<std::chrono::year_month_day> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-')
    return std::nullopt;
  int y = 0, m = 0, d = 0;
  if (!detail::parse_uint(s.substr(0, 4), y) ||
      !detail::parse_uint(s.substr(5, 2), m) ||
      !detail::parse_uint(s.substr(8, 2), d))
    return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok())
    return std::nullopt;
  return ymd;
}

inline std::string format_date(const std::chrono::year_month_day &d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

struct TapeFormat {
  char delimiter = ',';
};

/// Reads a header-bearing delimited tape with columns stock, date, time and
/// class (F or P), in any column order. Records come back sorted by
/// (stock, date, timestamp); ties keep file order.
inline TradeTape parse_tape(std::istream &in, const TapeFormat &format = {}) {
  std::string line;
  std::size_t row = 0;
  int col_stock = -1, col_date = -1, col_time = -1, col_class = -1;
  std::size_t n_cols = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty())
      continue;
    const auto cols = detail::split(line, format.delimiter);
    n_cols = cols.size();
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const auto c = cols[i];
      if (c == "stock")
        col_stock = static_cast<int>(i);
      else if (c == "date")
        col_date = static_cast<int>(i);
      else if (c == "time")
        col_time = static_cast<int>(i);
      else if (c == "class")
        col_class = static_cast<int>(i);
    }
    if (col_stock < 0 || col_date < 0 || col_time < 0 || col_class < 0)
      throw MalformedRow(row, "header must name columns stock,date,time,class");
    break;
  }
  if (n_cols == 0)
    throw EmptyTape();

  TradeTape tape;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty())
      continue;
    const auto cols = detail::split(line, format.delimiter);
    if (cols.size() != n_cols)
      throw MalformedRow(row, "expected " + std::to_string(n_cols) +
                                  " fields, found " + std::to_string(cols.size()));
    TradeRecord rec;
    rec.stock_code = std::string(cols[col_stock]);
    if (rec.stock_code.empty())
      throw MalformedRow(row, "empty stock code");
    const auto date = parse_date(cols[col_date]);
    if (!date)
      throw MalformedRow(row, "bad date '" + std::string(cols[col_date]) + "'");
    rec.trade_date = *date;
    const auto t = parse_time(cols[col_time]);
    if (!t)
      throw MalformedRow(row, "bad timestamp '" + std::string(cols[col_time]) +
                                  "' (want HH:MM:SS.cc)");
    rec.timestamp = *t;
    const auto cls = cols[col_class];
    if (cls == "F")
      rec.trade_class = TradeClass::Filled;
    else if (cls == "P")
      rec.trade_class = TradeClass::PartiallyFilled;
    else
      throw MalformedRow(row, "bad class token '" + std::string(cls) + "'");
    tape.records.push_back(std::move(rec));
  }
  if (tape.records.empty())
    throw EmptyTape();

  std::stable_sort(tape.records.begin(), tape.records.end(),
                   [](const TradeRecord &a, const TradeRecord &b) {
                     if (a.stock_code != b.stock_code)
                       return a.stock_code < b.stock_code;
                     if (a.trade_date != b.trade_date)
                       return a.trade_date < b.trade_date;
                     return a.timestamp < b.timestamp;
                   });
  return tape;
}

inline void write_tape(std::ostream &out, const TradeTape &tape) {
  out << "stock,date,time,class\n";
  for (const auto &r : tape.records)
    out << r.stock_code << ',' << format_date(r.trade_date) << ','
        << format_time(r.timestamp) << ','
        << (r.trade_class == TradeClass::Filled ? 'F' : 'P') << '\n';
}

/// Calendar file: header `open,close`, one `HH:MM:SS[.cc]` pair per row.
inline SessionCalendar parse_calendar(std::istream &in) {
  std::string line;
  std::size_t row = 0;
  bool header = true;
  std::vector<Session> sessions;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty())
      continue;
    const auto cols = detail::split(line, ',');
    if (header) {
      header = false;
      if (cols.size() == 2 && cols[0] == "open" && cols[1] == "close")
        continue;
    }
    if (cols.size() != 2)
      throw MalformedRow(row, "calendar rows are open,close");
    const auto o = parse_time(cols[0]);
    const auto c = parse_time(cols[1]);
    if (!o || !c)
      throw MalformedRow(row, "bad session time");
    sessions.push_back({*o, *c});
  }
  return SessionCalendar(std::move(sessions));
}

// ---------------------------------------------------------------------------
// Extraction

/// One series per stock, in stock-code order. Within each session of each
/// day the n matching trades yield n-1 durations; nothing spans a session or
/// day boundary, and trades outside every session are ignored.
inline std::vector<DurationSeries>
extract_durations(const TradeTape &tape, ClassFilter filter,
                  const SessionCalendar &calendar = {}) {
  std::vector<DurationSeries> out;
  const auto &recs = tape.records;
  std::size_t i = 0;
  while (i < recs.size()) {
    std::size_t j = i;
    while (j < recs.size() && recs[j].stock_code == recs[i].stock_code)
      ++j;

    DurationSeries s;
    s.stock_code = recs[i].stock_code;
    s.trade_class_filter = filter;

    std::optional<std::chrono::year_month_day> cur_day;
    std::optional<std::size_t> cur_session;
    std::optional<Centis> last;
    bool run_open = false;
    for (std::size_t k = i; k < j; ++k) {
      const auto &r = recs[k];
      if (!matches(filter, r.trade_class))
        continue;
      const auto sess = calendar.session_of(r.timestamp);
      if (!sess)
        continue;
      ++s.n_trades;
      if (r.trade_date != cur_day || sess != cur_session) {
        cur_day = r.trade_date;
        cur_session = sess;
        last = r.timestamp;
        run_open = false;
        continue;
      }
      const Centis tau = r.timestamp - *last;
      last = r.timestamp;
      if (!run_open) {
        s.session_starts.push_back(s.durations.size());
        run_open = true;
      }
      s.durations.push_back(tau);
      if (tau == 0)
        ++s.zero_count;
    }
    out.push_back(std::move(s));
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Summary

struct SummaryRow {
  std::string stock_code;
  ClassFilter trade_class_filter = ClassFilter::All;
  std::size_t n_trades = 0;
  std::size_t zero_count = 0;
  std::size_t n_durations = 0;
  /// Arithmetic mean including zero durations; absent for an empty series.
  std::optional<double> mean_duration;
};

struct TapeSummary {
  std::vector<SummaryRow> rows;

  const SummaryRow *find(std::string_view stock, ClassFilter f) const {
    for (const auto &r : rows)
      if (r.stock_code == stock && r.trade_class_filter == f)
        return &r;
    return nullptr;
  }
};

inline TapeSummary summarize(const std::vector<DurationSeries> &series) {
  TapeSummary out;
  for (const auto &s : series) {
    SummaryRow row;
    row.stock_code = s.stock_code;
    row.trade_class_filter = s.trade_class_filter;
    row.n_trades = s.n_trades;
    row.zero_count = s.zero_count;
    row.n_durations = s.durations.size();
    if (!s.durations.empty()) {
      const Centis total =
          std::accumulate(s.durations.begin(), s.durations.end(), Centis{0});
      row.mean_duration =
          static_cast<double>(total) / static_cast<double>(s.durations.size()) / 100.0;
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

/// Wide CSV with one row per stock and (N, N0, mean) column triples for the
/// all / filled / partially filled classes. Missing cells are left empty.
inline void write_summary_csv(std::ostream &out, const TapeSummary &summary) {
  std::vector<std::string> stocks;
  for (const auto &r : summary.rows)
    if (std::find(stocks.begin(), stocks.end(), r.stock_code) == stocks.end())
      stocks.push_back(r.stock_code);
  std::sort(stocks.begin(), stocks.end());
  out << "stock,N,N0,mean_tau,N_F,N0_F,mean_tau_F,N_PF,N0_PF,mean_tau_PF\n";
  for (const auto &st : stocks) {
    out << st;
    for (auto f : {ClassFilter::All, ClassFilter::Filled,
                   ClassFilter::PartiallyFilled}) {
      const auto *r = summary.find(st, f);
      if (!r) {
        out << ",,,";
        continue;
      }
      out << ',' << r->n_trades << ',' << r->zero_count << ',';
      if (r->mean_duration)
        out << shortest(*r->mean_duration);
    }
    out << '\n';
  }
}

} // namespace durascale
