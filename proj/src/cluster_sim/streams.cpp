// SPDX-License-Identifier: Apache-2.0
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fdsh/cluster_sim.hpp"
#include "fdsh/errors.hpp"

namespace fdsh {
namespace {

using nlohmann::json;

std::string_view event_name(EventKind k) {
  switch (k) {
    case EventKind::Inject:
      return "inject";
    case EventKind::Detect:
      return "detect";
    case EventKind::Action:
      return "action";
    case EventKind::Healthy:
      return "healthy";
    case EventKind::Tick:
      return "tick";
  }
  return "?";
}

std::optional<EventKind> parse_event_name(std::string_view s) {
  for (auto k : {EventKind::Inject, EventKind::Detect, EventKind::Action, EventKind::Healthy,
                 EventKind::Tick}) {
    if (event_name(k) == s) return k;
  }
  return std::nullopt;
}

json fault_json(const std::optional<FaultClass>& f) {
  return f ? json(std::string(to_string(*f))) : json(nullptr);
}

std::optional<FaultClass> fault_from_json(const json& j, std::size_t line) {
  if (j.is_null()) return std::nullopt;
  const auto f = parse_fault_class(j.get<std::string>());
  if (!f) throw ParseError("line " + std::to_string(line) + ": unknown fault class");
  return f;
}

// Calls fn(object, line_number) for every non-blank line.
template <class Fn>
void for_each_json_line(std::istream& is, Fn&& fn) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("line " + std::to_string(n) + ": " + e.what());
    }
    if (!j.is_object()) throw ParseError("line " + std::to_string(n) + ": expected an object");
    try {
      fn(j, n);
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(n) + ": " + e.what());
    }
  }
}

}  // namespace

void write_telemetry_jsonl(std::ostream& os, const std::vector<TelemetrySample>& samples) {
  for (const auto& s : samples) {
    json j{{"t", s.t}, {"node", s.node}, {"cpu", s.metrics[0]}, {"mem", s.metrics[1]},
           {"disk", s.metrics[2]}, {"net", s.metrics[3]}, {"err", s.metrics[4]}};
    os << j.dump() << '\n';
  }
}

void write_logs_jsonl(std::ostream& os, const std::vector<LogRecord>& records) {
  for (const auto& r : records) {
    json j{{"t", r.t}, {"node", r.node}, {"sev", std::string(to_string(r.severity))},
           {"template", r.template_id}, {"msg", r.message()}};
    os << j.dump() << '\n';
  }
}

void write_labels_jsonl(std::ostream& os, const std::vector<LabelRecord>& labels) {
  for (const auto& l : labels) {
    json j{{"t", l.t}, {"node", l.node}, {"fault", fault_json(l.fault)}};
    os << j.dump() << '\n';
  }
}

void write_events_jsonl(std::ostream& os, const std::vector<Event>& events, int episode) {
  for (const auto& e : events) {
    json j{{"t", e.t}, {"node", e.node}, {"event", std::string(event_name(e.kind))}};
    if (episode >= 0) j["ep"] = episode;
    switch (e.kind) {
      case EventKind::Tick:
        j["failed"] = e.failed_nodes;
        break;
      case EventKind::Action:
        j["action"] = std::string(to_string(e.action));
        j["fault"] = fault_json(e.fault);
        break;
      default:
        j["fault"] = fault_json(e.fault);
        break;
    }
    os << j.dump() << '\n';
  }
}

std::vector<TelemetrySample> read_telemetry_jsonl(std::istream& is) {
  std::vector<TelemetrySample> out;
  for_each_json_line(is, [&](const json& j, std::size_t) {
    TelemetrySample s;
    s.t = j.at("t").get<std::int64_t>();
    s.node = j.at("node").get<int>();
    s.metrics = {j.at("cpu").get<double>(), j.at("mem").get<double>(), j.at("disk").get<double>(),
                 j.at("net").get<double>(), j.at("err").get<double>()};
    out.push_back(s);
  });
  return out;
}

std::vector<LogRecord> read_logs_jsonl(std::istream& is) {
  std::vector<LogRecord> out;
  for_each_json_line(is, [&](const json& j, std::size_t n) {
    LogRecord r;
    r.t = j.at("t").get<std::int64_t>();
    r.node = j.at("node").get<int>();
    const auto sev = parse_severity(j.at("sev").get<std::string>());
    if (!sev) throw ParseError("line " + std::to_string(n) + ": unknown severity");
    r.severity = *sev;
    r.template_id = j.at("template").get<int>();
    std::istringstream words(j.at("msg").get<std::string>());
    for (std::string w; words >> w;) {
      for (char& ch : w) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      r.tokens.push_back(std::move(w));
    }
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<LabelRecord> read_labels_jsonl(std::istream& is) {
  std::vector<LabelRecord> out;
  for_each_json_line(is, [&](const json& j, std::size_t n) {
    out.push_back({j.at("t").get<std::int64_t>(), j.at("node").get<int>(),
                   fault_from_json(j.at("fault"), n)});
  });
  return out;
}

std::vector<std::vector<Event>> read_events_jsonl(std::istream& is) {
  std::map<int, std::vector<Event>> groups;
  for_each_json_line(is, [&](const json& j, std::size_t n) {
    Event e;
    e.t = j.at("t").get<std::int64_t>();
    e.node = j.at("node").get<int>();
    const auto kind = parse_event_name(j.at("event").get<std::string>());
    if (!kind) throw ParseError("line " + std::to_string(n) + ": unknown event kind");
    e.kind = *kind;
    if (j.contains("fault")) e.fault = fault_from_json(j.at("fault"), n);
    if (j.contains("action")) {
      const auto a = parse_action(j.at("action").get<std::string>());
      if (!a) throw ParseError("line " + std::to_string(n) + ": unknown action");
      e.action = *a;
    }
    if (j.contains("failed")) e.failed_nodes = j.at("failed").get<int>();
    const int ep = j.contains("ep") ? j.at("ep").get<int>() : 0;
    groups[ep].push_back(e);
  });
  std::vector<std::vector<Event>> out;
  for (auto& [ep, evs] : groups) out.push_back(std::move(evs));
  return out;
}

}  // namespace fdsh
