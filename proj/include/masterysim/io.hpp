#pragma once

// JSON documents for domains and model parameters.
//
// Domain (schema_version 1):
//   { "schema_version": 1, "name": "...",
//     "skills": ["S0", "S1", ...],
//     "problems": [ { "id": "P00", "steps": [["S0"], ["S1", "S2"]] }, ... ] }
//
// AFM parameters (schema_version 1), keyed by skill id:
//   { "schema_version": 1, "intercept": 0.0,
//     "ability": { "mean": 0.0, "sd": 1.0 },
//     "skills": [ { "id": "S0", "difficulty": 0.0, "learn_slope": 0.1 }, ... ] }
//
// BKT parameters (schema_version 1); "per_skill" is optional:
//   { "schema_version": 1,
//     "shared": { "p_init": 0.25, "p_learn": 0.22, "p_guess": 0.2, "p_slip": 0.1 },
//     "per_skill": { "S0": { ... }, ... } }

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "masterysim/domain.hpp"

namespace masterysim {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline void check_schema(const Json& j, const char* what) {
  if (!j.is_object()) throw Error(std::string(what) + ": expected a JSON object");
  if (!j.contains("schema_version")) throw Error(std::string(what) + ": missing schema_version");
  if (j.at("schema_version").get<int>() != kSchemaVersion)
    throw Error(std::string(what) + ": unsupported schema_version " + j.at("schema_version").dump());
}

template <class F>
auto rethrow_as_error(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error(std::string(what) + ": " + e.what());
  }
}

}  // namespace detail

inline Json domain_to_json(const Domain& domain) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = domain.name();
  Json skills = Json::array();
  for (const auto& s : domain.skills()) skills.push_back(s.id);
  j["skills"] = std::move(skills);
  Json problems = Json::array();
  for (const auto& p : domain.problems()) {
    Json steps = Json::array();
    for (const auto& step : p.steps) {
      Json ids = Json::array();
      for (SkillIndex k : step.skills) ids.push_back(domain.skill(k).id);
      steps.push_back(std::move(ids));
    }
    problems.push_back(Json{{"id", p.id}, {"steps", std::move(steps)}});
  }
  j["problems"] = std::move(problems);
  return j;
}

// Unknown skill ids are a load error; other invariants are left to validate_domain.
inline Domain domain_from_json(const Json& j) {
  return detail::rethrow_as_error("domain", [&] {
    detail::check_schema(j, "domain");
    std::vector<std::string> ids = j.at("skills").get<std::vector<std::string>>();
    std::unordered_map<std::string, SkillIndex> index;
    for (std::size_t k = 0; k < ids.size(); ++k) index.emplace(ids[k], k);
    std::vector<Problem> problems;
    for (const auto& jp : j.at("problems")) {
      Problem p;
      p.id = jp.at("id").get<std::string>();
      for (const auto& js : jp.at("steps")) {
        Step step;
        for (const auto& id : js) {
          auto it = index.find(id.get<std::string>());
          if (it == index.end()) throw Error("domain: problem " + p.id + " references unknown skill " + id.dump());
          step.skills.push_back(it->second);
        }
        p.steps.push_back(std::move(step));
      }
      problems.push_back(std::move(p));
    }
    return Domain(j.value("name", std::string("domain")), ids, std::move(problems));
  });
}

inline Json afm_to_json(const AfmParams& afm, const Domain& domain) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["intercept"] = afm.intercept;
  j["ability"] = {{"mean", afm.ability.mean}, {"sd", afm.ability.sd}};
  Json skills = Json::array();
  for (std::size_t k = 0; k < domain.skill_count(); ++k)
    skills.push_back({{"id", domain.skill(k).id},
                      {"difficulty", k < afm.difficulty.size() ? afm.difficulty[k] : 0.0},
                      {"learn_slope", k < afm.learn_slope.size() ? afm.learn_slope[k] : 0.0}});
  j["skills"] = std::move(skills);
  return j;
}

// Every domain skill must have an entry; extra entries are an error too.
inline AfmParams afm_from_json(const Json& j, const Domain& domain) {
  return detail::rethrow_as_error("afm parameters", [&] {
    detail::check_schema(j, "afm parameters");
    AfmParams afm;
    afm.intercept = j.at("intercept").get<double>();
    if (j.contains("ability")) {
      afm.ability.mean = j.at("ability").value("mean", 0.0);
      afm.ability.sd = j.at("ability").value("sd", 1.0);
    }
    const std::size_t n = domain.skill_count();
    afm.difficulty.assign(n, 0.0);
    afm.learn_slope.assign(n, 0.0);
    std::vector<bool> seen(n, false);
    for (const auto& js : j.at("skills")) {
      const auto id = js.at("id").get<std::string>();
      const auto k = domain.find_skill(id);
      if (!k) throw Error("afm parameters: unknown skill " + id);
      if (seen[*k]) throw Error("afm parameters: duplicate skill " + id);
      seen[*k] = true;
      afm.difficulty[*k] = js.at("difficulty").get<double>();
      afm.learn_slope[*k] = js.at("learn_slope").get<double>();
    }
    for (std::size_t k = 0; k < n; ++k)
      if (!seen[k]) throw Error("afm parameters: missing skill " + domain.skill(k).id);
    return afm;
  });
}

namespace detail {

inline Json bkt_skill_json(const BktSkillParams& q) {
  return {{"p_init", q.p_init}, {"p_learn", q.p_learn}, {"p_guess", q.p_guess}, {"p_slip", q.p_slip}};
}

inline BktSkillParams bkt_skill_from(const Json& j, const BktSkillParams& fallback) {
  BktSkillParams q;
  q.p_init = j.value("p_init", fallback.p_init);
  q.p_learn = j.value("p_learn", fallback.p_learn);
  q.p_guess = j.value("p_guess", fallback.p_guess);
  q.p_slip = j.value("p_slip", fallback.p_slip);
  return q;
}

}  // namespace detail

inline Json bkt_to_json(const BktParams& bkt, const Domain& domain) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["shared"] = detail::bkt_skill_json(bkt.shared);
  if (!bkt.per_skill.empty()) {
    Json per = Json::object();
    for (std::size_t k = 0; k < bkt.per_skill.size(); ++k)
      per[domain.skill(k).id] = detail::bkt_skill_json(bkt.per_skill[k]);
    j["per_skill"] = std::move(per);
  }
  return j;
}

// Per-skill entries missing a field inherit it from "shared"; skills without
// an entry use "shared" as a whole.
inline BktParams bkt_from_json(const Json& j, const Domain& domain) {
  return detail::rethrow_as_error("bkt parameters", [&] {
    detail::check_schema(j, "bkt parameters");
    BktParams bkt;
    if (j.contains("shared")) bkt.shared = detail::bkt_skill_from(j.at("shared"), BktSkillParams{});
    if (j.contains("per_skill")) {
      bkt.per_skill.assign(domain.skill_count(), bkt.shared);
      for (const auto& [id, q] : j.at("per_skill").items()) {
        const auto k = domain.find_skill(id);
        if (!k) throw Error("bkt parameters: unknown skill " + id);
        bkt.per_skill[*k] = detail::bkt_skill_from(q, bkt.shared);
      }
    }
    return bkt;
  });
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed for " + path);
}

inline Json read_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace masterysim
