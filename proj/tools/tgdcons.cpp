// tgdcons: command-line front end.
// Exit codes: 0 holds/success, 1 fails, 2 unknown, 64 usage, 65 parse.

#include "tgdc/conway.hpp"
#include "tgdc/frontier_one.hpp"
#include "tgdc/replay.hpp"
#include "tgdc/textio.hpp"
#include "tgdc/triviality.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <utility>

namespace fs = std::filesystem;
using namespace tgdc;

namespace {

constexpr int kUsage = 64;
constexpr int kParse = 65;
constexpr int kInternal = 70;

struct UsageError : Error { using Error::Error; };

// A parse error tagged with the file it came from.
struct FileParseError {
  std::string path;
  ParseError err;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <class F>
auto parsing_text(const std::string& label, const std::string& text, F&& f) {
  try {
    return f(text);
  } catch (const ParseError& e) {
    throw FileParseError{label, e};
  }
}

template <class F>
auto parsing(const std::string& path, F&& f) {
  return parsing_text(path, read_file(path), std::forward<F>(f));
}

struct Inputs {
  ArityTable arities;

  RuleSet rules(const std::string& path) {
    return parsing(path, [&](const std::string& s) { return parse_rules(s, &arities); });
  }
  Database db(const std::string& path, bool allow_nulls = false) {
    return parsing(path, [&](const std::string& s) { return parse_database(s, &arities, allow_nulls); });
  }
  Schema schema(const std::string& text, const char* flag) {
    if (text.empty()) return Schema();
    if (text == "*") return Schema::universal();
    try {
      return parse_schema(text, arities);
    } catch (const ParseError& e) {
      throw FileParseError{flag, e};
    }
  }
};

struct BudgetFlags {
  Budget b;
  void attach(CLI::App* app) {
    app->add_option("--depth", b.max_depth, "chase rounds")->check(CLI::NonNegativeNumber);
    app->add_option("--max-facts", b.max_facts, "chase size cap");
    app->add_option("--candidates", b.max_candidates, "enumeration cap, 0 = none");
    app->add_option("--db-size,--max-db-size", b.db_size, "candidate database size")->check(CLI::NonNegativeNumber);
    app->add_option("--hom-n", b.hom_n, "bound n for bounded homomorphisms")->check(CLI::NonNegativeNumber);
    app->add_option("--model-size", b.model_size, "finite countermodel search nodes, 0 = off");
  }
};

struct Output {
  bool json_mode = false;

  int verdict(const Verdict& v) const {
    if (json_mode) {
      std::cout << emit_verdict(v) << "\n";
    } else {
      std::string name = outcome_name(v.value);
      for (auto& ch : name) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      std::cout << name << "\n";
      if (!v.certificate.is_null()) std::cout << "certificate: " << v.certificate.dump(2) << "\n";
      if (!v.report.is_null()) std::cout << "report: " << v.report.dump(2) << "\n";
      std::cout << "budget: " << v.budget.to_json().dump() << "\n";
    }
    return exit_code(v.value);
  }

  int replay(const ReplayResult& r) const {
    if (json_mode) {
      std::cout << r.to_json().dump() << "\n";
    } else {
      std::cout << (!r.applicable ? "NOTHING TO VERIFY" : r.verified ? "VERIFIED" : "REJECTED") << "\n";
      if (r.applicable) std::cout << "kind: " << r.kind << (r.complete ? "" : " (bounded evidence only)") << "\n";
      for (const auto& c : r.checks)
        std::cout << (c["ok"].get<bool>() ? "  ok    " : "  FAIL  ") << c["check"].get<std::string>() << "\n";
    }
    return r.exit_code();
  }
};

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FileParseError{path, ParseError({1, 1, 1}, ParseErrorKind::Syntax, e.what())};
  }
}

std::vector<int64_t> int_list(const std::string& s, const char* flag) {
  std::vector<int64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stoll(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string(flag) + ": not an integer list: " + s);
    }
  }
  return out;
}

// ------------------------------------------------------------ subcommands

struct ChaseCmd {
  std::string rules, db;
  BudgetFlags budget;

  int run(const Output& out) {
    Inputs in;
    RuleSet T = in.rules(rules);
    Database D = in.db(db);
    ChaseResult r = chase(D, T, budget.b);
    if (out.json_mode) {
      json levels = json::array();
      uint32_t max_level = 0;
      for (uint32_t l : r.level) max_level = std::max(max_level, l);
      std::vector<std::vector<Fact>> by(max_level + 1);
      for (uint32_t id = 0; id < r.size(); ++id) by[r.level[id]].push_back(r.facts.fact(id));
      for (auto& fs : by) levels.push_back(facts_json(Instance(std::move(fs))));
      json j{{"budget", budget.b.to_json()}, {"facts", r.size()},        {"levels", levels},
             {"rounds", r.rounds},           {"saturated", r.saturated}, {"steps", r.steps},
             {"truncated_by_facts", r.truncated_by_facts}};
      std::cout << j.dump() << "\n";
    } else {
      std::cout << format_leveled(r);
      std::cout << "# saturated: " << (r.saturated ? "yes" : "no") << "\n";
      std::cout << "# budget: " << budget.b.to_json().dump() << "\n";
    }
    return 0;
  }
};

struct EvalCmd {
  std::string rules, db, query, cq_text, tuple, verify;
  BudgetFlags budget;

  int run(const Output& out) {
    Inputs in;
    RuleSet T = rules.empty() ? RuleSet{} : in.rules(rules);
    Database D = in.db(db);
    CQ q;
    if (!query.empty())
      q = parsing(query, [&](const std::string& s) { return parse_cq(s, &in.arities); });
    else if (!cq_text.empty())
      q = parsing_text("--cq", cq_text, [&](const std::string& s) { return parse_cq(s, &in.arities); });
    else
      throw UsageError("eval needs --query or --cq");
    if (!tuple.empty() || q.is_boolean()) {
      std::vector<Term> t;
      if (!tuple.empty()) {
        std::stringstream ss(tuple);
        std::string item;
        while (std::getline(ss, item, ',')) t.push_back(constant(item));
      }
      if (t.size() != q.answer.size()) throw UsageError("--tuple length does not match the query arity");
      if (!verify.empty()) return out.replay(replay_cq_entailment(read_json(verify), D, T, q, t));
      return out.verdict(cq_entailed(D, T, q, t, budget.b));
    }
    if (!verify.empty()) throw UsageError("--verify-certificate needs --tuple for a non-Boolean query");
    ChaseResult r = chase(D, T, budget.b);
    std::vector<std::vector<std::string>> answers;
    for (const auto& row : evaluate_cq(q, r.instance())) {
      if (!std::all_of(row.begin(), row.end(), [](Term x) { return x.is_named(); })) continue;
      std::vector<std::string> names;
      for (Term x : row) names.push_back(term_name(x));
      answers.push_back(std::move(names));
    }
    std::sort(answers.begin(), answers.end());
    if (out.json_mode) {
      json j{{"answers", answers}, {"budget", budget.b.to_json()}, {"exact", r.saturated}};
      std::cout << j.dump() << "\n";
    } else {
      for (const auto& a : answers) {
        for (size_t i = 0; i < a.size(); ++i) std::cout << (i ? "," : "") << a[i];
        std::cout << "\n";
      }
      std::cout << "# " << (r.saturated ? "exact" : "lower bound, chase not saturated") << "\n";
    }
    return 0;
  }
};

struct CheckHomCmd {
  std::string source, target, sigma = "*", verify;
  int n = -1;
  bool db_preserving = false;
  BudgetFlags budget;

  int run(const Output& out) {
    Inputs in;
    Instance I1 = in.db(source, true), I2 = in.db(target, true);
    Schema s = in.schema(sigma, "--sigma");
    if (n >= 0) {
      budget.b.hom_n = n;
      if (!verify.empty()) return out.replay(replay_bounded_hom(read_json(verify), I1, I2, s));
      return out.verdict(hom_exists_n(I1, I2, s, n, budget.b));
    }
    HomOptions opt;
    opt.sigma = s;
    opt.db_preserving = db_preserving;
    if (!verify.empty()) return out.replay(replay_hom(read_json(verify), I1, I2, opt));
    return out.verdict(check_hom(I1, I2, opt, budget.b));
  }
};

struct TrivialityCmd {
  std::string rules, sigma_d, sigma_q, verify;
  bool serial = false;
  BudgetFlags budget;

  int run(const Output& out) {
    Inputs in;
    RuleSet T = in.rules(rules);
    Schema sd = in.schema(sigma_d, "--data-schema"), sq = in.schema(sigma_q, "--query-schema");
    if (!verify.empty()) return out.replay(replay_triviality(read_json(verify), T, sd, sq));
    return out.verdict(check_triviality(T, sd, sq, budget.b, !serial));
  }
};

struct ConservativeCmd {
  bool cq_mode = false;
  std::string t1, t2, sigma_d, sigma_q, verify;
  bool serial = false;
  BudgetFlags budget;

  int run(const Output& out) {
    Inputs in;
    RuleSet T1 = in.rules(t1), T2 = in.rules(t2);
    Schema sd = in.schema(sigma_d, "--data-schema"), sq = in.schema(sigma_q, "--query-schema");
    if (!verify.empty()) return out.replay(replay_conservativity(read_json(verify), T1, T2, sd, sq));
    if (cq_mode) return out.verdict(check_cq_conservative(T1, T2, sd, sq, budget.b, !serial));
    return out.verdict(check_hom_conservative(T1, T2, sd, sq, budget.b, !serial));
  }
};

struct ValidateTreeCmd {
  std::string tree, rules, sigma, verify;
  BudgetFlags budget;

  int run(const Output& out) {
    Inputs in;
    RuleSet T1 = in.rules(rules);
    json j = read_json(tree);
    LabeledInstanceTree t;
    TType t_hat;
    Schema s;
    try {
      t = parse_tree(j, &in.arities);
      if (j.contains("t_hat")) {
        t_hat = parse_type(j["t_hat"], &in.arities);
      } else if (j.contains("database") && j.contains("constant")) {
        Database D = facts_from_json(j["database"]);
        t_hat = observed_type(D, T1, constant(j["constant"].get<std::string>()), budget.b);
      } else {
        throw UsageError("the tree file needs \"t_hat\" or \"database\" with \"constant\"");
      }
      std::string sig = !sigma.empty() ? sigma : j.value("schema", std::string());
      if (!sig.empty()) {
        s = in.schema(sig, "--sigma");
      } else {
        for (const auto& bag : t.bags) s = s.merged(schema_of(bag));
      }
    } catch (const ParseError& e) {
      throw FileParseError{tree, e};
    }
    Verdict v = validate_proper_tree(t, t_hat, T1, s, budget.b);
    if (!verify.empty()) {
      // Re-running the validator is the replay: every condition it checks
      // is a chase or homomorphism test.
      json claimed = read_json(verify);
      ReplayResult r;
      r.kind = claimed.contains("certificate") && claimed["certificate"].is_object()
                   ? claimed["certificate"].value("kind", std::string())
                   : std::string();
      r.applicable = !r.kind.empty();
      r.verified = r.applicable && claimed.value("verdict", std::string()) == outcome_name(v.value) &&
                   claimed["certificate"] == v.certificate;
      r.checks.push_back({{"check", "re-validation reproduces the verdict and certificate"}, {"ok", r.verified}});
      return out.replay(r);
    }
    return out.verdict(v);
  }
};

struct ConwayCmd {
  int gamma = 0;
  std::string alpha, beta, out_dir;
  int max_n = 3, max_val = 4;

  int run(const Output& out) {
    ConwaySpec s;
    s.gamma = gamma;
    s.alpha = int_list(alpha, "--alpha");
    s.beta = int_list(beta, "--beta");
    s.validate();
    ConwaySpec red = s;
    red.reduction = true;
    try {
      red.validate();
      s.reduction = true;
    } catch (const InvalidSpec&) {
    }
    fs::path dir(out_dir);
    fs::create_directories(dir / "rivers");
    auto write = [&](const fs::path& rel, const std::string& text) {
      std::ofstream f(dir / rel, std::ios::binary);
      if (!f) throw UsageError("cannot write " + (dir / rel).string());
      f << text;
    };
    write("myth.tgd", format_rules(myth_rules()));
    json files = {{"myth_rules", "myth.tgd"}};
    if (s.reduction) {
      write("t1.tgd", format_rules(gen_T1(s)));
      GuardedT0 t0 = gen_guarded_T0(s);
      write("t0.tgd", format_rules(t0.rules));
      files["t1_rules"] = "t1.tgd";
      files["t0_rules"] = "t0.tgd";
      files["t0_data_schema"] = format_schema(t0.sigma_d);
    }
    json rivers = json::array();
    auto ks = locally_correct_rivers(s, max_n, max_val);
    for (size_t i = 0; i < ks.size(); ++i) {
      char id[32];
      std::snprintf(id, sizeof id, "river_%04zu", i);
      std::string rel = std::string("rivers/") + id + ".db";
      write(rel, format_database(river_build(ks[i])));
      auto rc = river_correctness(ks[i], s);
      bool obs = observation1(ks[i]);
      rivers.push_back({{"id", id},
                        {"river", ks[i].to_string()},
                        {"database", rel},
                        {"locally_correct", rc.locally_correct},
                        {"correct", rc.correct},
                        {"defect", rc.defect ? json(*rc.defect) : json(nullptr)},
                        {"observation1", obs},
                        {"expected_myth_hom", obs ? "holds" : "fails"},
                        {"pins", {{"0", "b" + std::to_string(ks[i].n())}, {"1", "b" + std::to_string(ks[i].n() - 1)}}}});
    }
    json manifest = {{"spec", s.to_json()},
                     {"max_n", max_n},
                     {"max_val", max_val},
                     {"files", files},
                     {"query_schema", format_schema(myth_query_schema())},
                     {"rivers", rivers}};
    write("manifest.json", manifest.dump(2) + "\n");
    if (out.json_mode)
      std::cout << manifest.dump() << "\n";
    else
      std::cout << "wrote " << rivers.size() << " rivers and manifest.json to " << dir.string() << "\n";
    return 0;
  }
};

void add_verify(CLI::App* app, std::string& target) {
  app->add_option("--verify-certificate", target, "replay a verdict JSON printed by this subcommand")
      ->check(CLI::ExistingFile);
}

int run(int argc, char** argv) {
  CLI::App app{"Conservative extensions of tuple-generating dependencies"};
  app.require_subcommand(1);
  Output out;
  app.add_flag("--json", out.json_mode, "JSON output on stdout");

  ChaseCmd chase_cmd;
  auto* c = app.add_subcommand("chase", "restricted chase with a leveled dump");
  c->add_option("--rules", chase_cmd.rules)->required()->check(CLI::ExistingFile);
  c->add_option("--db", chase_cmd.db)->required()->check(CLI::ExistingFile);
  chase_cmd.budget.attach(c);

  EvalCmd eval_cmd;
  auto* e = app.add_subcommand("eval", "certain answers of a CQ, or entailment of one tuple");
  e->add_option("--rules", eval_cmd.rules)->check(CLI::ExistingFile);
  e->add_option("--db", eval_cmd.db)->required()->check(CLI::ExistingFile);
  e->add_option("--query", eval_cmd.query, "CQ file")->check(CLI::ExistingFile);
  e->add_option("--cq", eval_cmd.cq_text, "CQ text");
  e->add_option("--tuple", eval_cmd.tuple, "comma-separated constants");
  add_verify(e, eval_cmd.verify);
  eval_cmd.budget.attach(e);

  CheckHomCmd hom_cmd;
  auto* h = app.add_subcommand("check-hom", "homomorphism or bounded homomorphism between instances");
  h->add_option("--source", hom_cmd.source)->required()->check(CLI::ExistingFile);
  h->add_option("--target", hom_cmd.target)->required()->check(CLI::ExistingFile);
  h->add_option("--sigma", hom_cmd.sigma, "schema restriction, * for all");
  h->add_option("--n", hom_cmd.n, "check the n-bounded relation instead");
  h->add_flag("--db-preserving", hom_cmd.db_preserving);
  add_verify(h, hom_cmd.verify);
  hom_cmd.budget.attach(h);

  TrivialityCmd triv_cmd;
  auto* t = app.add_subcommand("check-triviality", "triviality of a linear rule set");
  t->add_option("--rules", triv_cmd.rules)->required()->check(CLI::ExistingFile);
  t->add_option("--data-schema", triv_cmd.sigma_d)->required();
  t->add_option("--query-schema", triv_cmd.sigma_q)->required();
  t->add_flag("--serial", triv_cmd.serial);
  add_verify(t, triv_cmd.verify);
  triv_cmd.budget.attach(t);

  ConservativeCmd hc, cc;
  cc.cq_mode = true;
  for (auto [cmd, name, what] : {std::tuple{&hc, "check-hom-conservative", "bounded hom-conservativity"},
                                 std::tuple{&cc, "check-cq-conservative", "bounded CQ-conservativity"}}) {
    auto* s = app.add_subcommand(name, what);
    s->add_option("--t1", cmd->t1, "base rule set")->required()->check(CLI::ExistingFile);
    s->add_option("--t2", cmd->t2, "extended rule set")->required()->check(CLI::ExistingFile);
    s->add_option("--data-schema", cmd->sigma_d)->required();
    s->add_option("--query-schema", cmd->sigma_q)->required();
    s->add_flag("--serial", cmd->serial);
    add_verify(s, cmd->verify);
    cmd->budget.attach(s);
  }

  ValidateTreeCmd tree_cmd;
  auto* v = app.add_subcommand("validate-tree", "check a labeled instance tree for properness");
  v->add_option("--tree", tree_cmd.tree)->required()->check(CLI::ExistingFile);
  v->add_option("--rules", tree_cmd.rules)->required()->check(CLI::ExistingFile);
  v->add_option("--sigma", tree_cmd.sigma, "head schema; defaults to the bag relations");
  add_verify(v, tree_cmd.verify);
  tree_cmd.budget.attach(v);

  ConwayCmd conway_cmd;
  auto* g = app.add_subcommand("gen-conway-suite", "rivers, rule files and an expectations manifest");
  g->add_option("--gamma", conway_cmd.gamma)->required();
  g->add_option("--alpha", conway_cmd.alpha)->required();
  g->add_option("--beta", conway_cmd.beta)->required();
  g->add_option("--out", conway_cmd.out_dir)->required();
  g->add_option("--max-n", conway_cmd.max_n)->check(CLI::PositiveNumber);
  g->add_option("--max-val", conway_cmd.max_val)->check(CLI::PositiveNumber);

  // Accept --json after the subcommand too.
  for (auto* sub : app.get_subcommands({})) sub->add_flag("--json", out.json_mode, "JSON output on stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& s) {
    app.exit(s);
    return 0;
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kUsage;
  }

  try {
    if (c->parsed()) return chase_cmd.run(out);
    if (e->parsed()) return eval_cmd.run(out);
    if (h->parsed()) return hom_cmd.run(out);
    if (t->parsed()) return triv_cmd.run(out);
    if (app.get_subcommand("check-hom-conservative")->parsed()) return hc.run(out);
    if (app.get_subcommand("check-cq-conservative")->parsed()) return cc.run(out);
    if (v->parsed()) return tree_cmd.run(out);
    if (g->parsed()) return conway_cmd.run(out);
  } catch (const FileParseError& f) {
    std::cerr << f.path << ":" << f.err.span.line << ":" << f.err.span.column << ": "
              << parse_error_kind_name(f.err.kind) << ": " << f.err.message << "\n";
    return kParse;
  } catch (const MalformedTree& m) {
    std::cerr << "malformed tree at node " << m.node << " (" << m.condition << "): " << m.what() << "\n";
    return kParse;
  } catch (const ParseError& p) {
    std::cerr << "<input>:" << p.span.line << ":" << p.span.column << ": " << parse_error_kind_name(p.kind) << ": "
              << p.message << "\n";
    return kParse;
  } catch (const UsageError& u) {
    std::cerr << "usage: " << u.what() << "\n";
    return kUsage;
  } catch (const InvalidSpec& s) {
    std::cerr << "invalid Conway spec: " << s.what() << "\n";
    return kUsage;
  } catch (const PreconditionError& p) {
    std::cerr << "precondition: " << p.what() << "\n";
    return kUsage;
  } catch (const MalformedRule& m) {
    std::cerr << "malformed rule: " << m.what() << "\n";
    return kUsage;
  } catch (const SymbolClash& s) {
    std::cerr << "symbol clash: " << s.what() << "\n";
    return kUsage;
  } catch (const std::exception& ex) {
    std::cerr << "internal error: " << ex.what() << "\n";
    return kInternal;
  }
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
