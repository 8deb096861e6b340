#include "finsler/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "finsler/pipeline.hpp"

namespace finsler {
namespace {

enum class Format { text, csv, json };

Format parse_format(const std::string& s, std::initializer_list<Format> allowed) {
  Format f;
  if (s == "text") f = Format::text;
  else if (s == "csv") f = Format::csv;
  else if (s == "json") f = Format::json;
  else throw Error(ErrorCode::InvalidInput, "unknown format '" + s + "'");
  for (Format a : allowed) {
    if (a == f) return f;
  }
  throw Error(ErrorCode::InvalidInput, "format '" + s + "' is not available for this command");
}

Rational parse_rational(const std::string& s) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) throw Error(ErrorCode::InvalidInput, "expected k/n, got '" + s + "'");
  try {
    std::size_t a = 0, b = 0;
    const long long k = std::stoll(s.substr(0, slash), &a);
    const long long n = std::stoll(s.substr(slash + 1), &b);
    if (a != slash || b != s.size() - slash - 1 || n <= 0) throw std::invalid_argument(s);
    return Rational(k, n);
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::InvalidInput, "expected k/n, got '" + s + "'");
  }
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::InvalidInput, what + ": not a number '" + s + "'");
  }
}

struct ClassArgs {
  std::string name;
  std::optional<double> b;
  std::string sigma;
};

void add_class_options(CLI::App* app, ClassArgs& a, bool required) {
  auto* opt = app->add_option("--class", a.name, "class tag, e.g. cg6");
  if (required) opt->required();
  app->add_option("--b", a.b, "class parameter b (shear size or eigenvalue)");
  app->add_option("--sigma", a.sigma, "rotation number: k/n for CG-7, decimal for CG-8");
}

PoincareClass build_class(const ClassArgs& a) {
  switch (parse_class_name(a.name)) {
    case CGClass::CG1: return PoincareClass::cg1(a.b.value_or(1.0));
    case CGClass::CG2: return PoincareClass::cg2();
    case CGClass::CG3: return PoincareClass::cg3(a.b.value_or(1.0));
    case CGClass::CG4: return PoincareClass::cg4(a.b.value_or(1.0));
    case CGClass::CG5: return PoincareClass::cg5();
    case CGClass::CG6: return PoincareClass::cg6(a.b.value_or(1.0));
    case CGClass::CG7: {
      if (a.sigma.empty()) throw Error(ErrorCode::InvalidInput, "CG-7 needs --sigma k/n");
      const Rational s = parse_rational(a.sigma);
      return PoincareClass::cg7(s.numerator(), s.denominator());
    }
    case CGClass::CG8:
      if (a.sigma.empty()) throw Error(ErrorCode::InvalidInput, "CG-8 needs --sigma");
      if (a.sigma.find('/') != std::string::npos) {
        throw Error(ErrorCode::InvalidInput, "CG-8 needs an irrational sigma, given as a decimal");
      }
      return PoincareClass::cg8(parse_double(a.sigma, "--sigma"));
    case CGClass::CG9: return PoincareClass::cg9(a.b.value_or(2.0));
  }
  throw Error(ErrorCode::InvalidInput, "unknown class");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

nlohmann::json class_json(const PoincareClass& c) {
  nlohmann::json j;
  j["class"] = c.name();
  j["description"] = c.describe();
  j["b"] = c.b;
  if (c.tag == CGClass::CG7) j["sigma"] = std::to_string(c.sigma_exact.numerator()) + "/" + std::to_string(c.sigma_exact.denominator());
  else if (c.tag == CGClass::CG8) j["sigma"] = c.sigma;
  return j;
}

// ---------------------------------------------------------------------------

struct ClassifyArgs {
  std::string matrix, format = "text";
  double eig_tol = kDefaultEigTol;
  std::optional<int> max_den;
};

int cmd_classify(const ClassifyArgs& a, std::ostream& out) {
  const Format f = parse_format(a.format, {Format::text, Format::json});
  if (!(a.eig_tol > 0.0)) throw Error(ErrorCode::InvalidInput, "--eig-tol must be positive");
  if (a.max_den && *a.max_den < 1) throw Error(ErrorCode::InvalidInput, "--max-den must be >= 1");
  ClassifyOptions opt;
  opt.eig_tol = a.eig_tol;
  opt.max_denominator = a.max_den;
  const PoincareClass c = classify(parse_matrix(a.matrix), opt);
  if (f == Format::json) out << class_json(c).dump(2) << "\n";
  else out << c.describe() << "\n";
  return kExitOk;
}

struct IterateArgs {
  ClassArgs cls;
  std::optional<int> p;
  int mmax = 10;
  std::string format = "csv";
};

int cmd_iterate(const IterateArgs& a, std::ostream& out) {
  const Format f = parse_format(a.format, {Format::text, Format::csv, Format::json});
  if (a.mmax < 1 || a.mmax > 1000000) throw Error(ErrorCode::InvalidInput, "--mmax must lie in [1, 1e6]");
  const PoincareClass c = build_class(a.cls);
  const int p = a.p.value_or(min_p(c.tag));
  const IndexSequence seq = index_sequence(c, p, a.mmax);
  if (f == Format::csv) {
    out << seq.to_csv();
  } else if (f == Format::json) {
    nlohmann::json j = class_json(c);
    j["p"] = p;
    j["alpha"] = seq.alpha.to_string();
    j["n_c"] = seq.n_c ? nlohmann::json(*seq.n_c) : nlohmann::json(nullptr);
    j["i"] = seq.i;
    j["nu"] = seq.nu;
    out << j.dump(2) << "\n";
  } else {
    out << c.describe() << ", p = " << p << "\n";
    out << "alpha = " << seq.alpha.to_string() << "\n";
    out << "n_c = " << (seq.n_c ? std::to_string(*seq.n_c) : std::string("none")) << "\n";
    for (int m = 1; m <= seq.m_max(); ++m) out << "m=" << m << " i=" << seq.i[m - 1] << " nu=" << seq.nu[m - 1] << "\n";
  }
  return kExitOk;
}

struct MorseArgs {
  ClassArgs cls;
  std::optional<int> p;
  bool katok = false;
  double epsilon = 0.0;
  int kmax = 3;
  std::string format = "text";
};

double katok_epsilon(double e) { return e > 0.0 ? e : 1.0 / 3.14159265358979323846; }

int cmd_morse(const MorseArgs& a, std::ostream& out) {
  const Format f = parse_format(a.format, {Format::text, Format::csv, Format::json});
  if (a.kmax < 0 || a.kmax > 60) throw Error(ErrorCode::InvalidInput, "--kmax must lie in [0, 60]");
  std::vector<MorseInput> inputs;
  std::vector<Constraint> constraints;
  if (a.katok) {
    for (const auto& r : katok_closed_form_records(katok_epsilon(a.epsilon))) inputs.push_back({r.seq, r.inv});
  } else {
    if (a.cls.name.empty()) throw Error(ErrorCode::InvalidInput, "morse needs --class or --katok");
    const PoincareClass c = build_class(a.cls);
    const int p = a.p.value_or(min_p(c.tag));
    const IndexSequence seq = index_sequence(c, p, 1);
    const LocalInvariants inv = LocalInvariants::symbolic(seq, truncation_order(seq, a.kmax));
    constraints = inv.constraints(seq);
    inputs.push_back({seq, inv});
  }
  const MorseLedger ledger = morse_type_numbers(inputs, a.kmax);
  const auto checks = check_morse_inequalities(ledger, a.kmax);
  if (f == Format::csv) {
    out << ledger.to_csv();
  } else if (f == Format::json) {
    nlohmann::json j;
    j["ledger"] = nlohmann::json::array();
    for (int k = 0; k <= a.kmax; ++k) j["ledger"].push_back({{"k", k}, {"M", ledger.M[k].to_string()}, {"b", ledger.b[k]}});
    j["inequalities"] = nlohmann::json::array();
    for (const auto& c : checks) j["inequalities"].push_back({{"text", c.text()}, {"decision", to_string(c.decision)}});
    j["constraints"] = nlohmann::json::array();
    for (const auto& c : constraints) j["constraints"].push_back({{"text", c.text}, {"ref", c.ref}});
    out << j.dump(2) << "\n";
  } else {
    out << ledger.to_csv();
    for (const auto& c : checks) out << c.text() << "\n";
    for (const auto& c : constraints) out << "constraint: " << c.text << "  {" << c.ref << "}\n";
  }
  return kExitOk;
}

struct VerifyArgs {
  bool single = false, multi = false, all = false, katok = false;
  ClassArgs cls;
  std::optional<int> p;
  std::optional<long long> khat1;
  double epsilon = 0.0;
  std::string records, format = "text";
  std::optional<int> depth;
  int max_den = 64;
};

int p_for_index(const PoincareClass& c, int index) {
  for (int p = min_p(c.tag); p <= 1000; ++p) {
    if (index_at(c, p, 1) == index) return p;
  }
  throw Error(ErrorCode::InvalidP, "no p matches i(c) = " + std::to_string(index) + " for " + c.describe());
}

std::vector<MultiRecord> records_for_multi(const VerifyArgs& a) {
  if (a.katok) return katok_closed_form_records(katok_epsilon(a.epsilon));
  if (!a.records.empty()) {
    std::vector<MultiRecord> out;
    for (const auto& r : records_from_json(read_file(a.records))) {
      if (r.multiplicity != 1) continue;
      if (r.measured_index < 0) throw Error(ErrorCode::InvalidInput, "record without measured index");
      const PoincareClass c = classify(r.poincare);
      const int p = p_for_index(c, r.measured_index);
      const IndexSequence seq = index_sequence(c, p, 1);
      std::ostringstream label;
      label << "L=" << r.length;
      const std::int64_t depth = seq.n_c ? std::max<std::int64_t>(2 * *seq.n_c, truncation_order(seq, 6)) : 0;
      out.push_back({seq, LocalInvariants::symbolic(seq, depth), label.str()});
    }
    if (out.empty()) throw Error(ErrorCode::InvalidInput, "no prime records in " + a.records);
    return out;
  }
  if (a.cls.name.empty()) throw Error(ErrorCode::InvalidInput, "--multi needs --katok, --records or --class");
  const PoincareClass c = build_class(a.cls);
  const int p = a.p.value_or(min_p(c.tag));
  const IndexSequence seq = index_sequence(c, p, 1);
  LocalInvariants inv;
  if (seq.n_c) {
    inv = LocalInvariants::symbolic(seq, std::max<std::int64_t>(2 * *seq.n_c, truncation_order(seq, 6)));
    if (c.tag == CGClass::CG7 && a.khat1) {
      // Degenerate saddle: k(c^n) = (0, k_1, 0) with the given khat_1.
      std::map<std::string, LinExpr> s;
      for (const auto& [m, it] : inv.degenerate) {
        s[khat_name(0, m)] = LinExpr(0);
        s[k_name(2, m)] = LinExpr(0);
        s[khat_name(2, m)] = LinExpr(0);
        s[khat_name(1, m)] = LinExpr(*a.khat1);
        if (m % 2 == 0) s[khat_minus_name(2, m)] = LinExpr(0);
      }
      inv = inv.substitute(s);
    }
  }
  return {{seq, inv, c.describe()}};
}

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  const Format f = parse_format(a.format, {Format::text, Format::json});
  if (a.single == a.multi) throw Error(ErrorCode::InvalidInput, "verify needs exactly one of --single, --multi");
  if (a.max_den < 3 || a.max_den > 512) throw Error(ErrorCode::InvalidInput, "--max-den must lie in [3, 512]");
  if (a.depth && *a.depth < 0) throw Error(ErrorCode::InvalidInput, "--depth must be >= 0");
  SingleOptions opt;
  opt.max_denominator = a.max_den;
  if (a.multi) {
    if (a.epsilon < 0.0 || a.epsilon >= 1.0) throw Error(ErrorCode::InvalidInput, "--epsilon must lie in [0, 1)");
    const MultiResult res = verify_multi(records_for_multi(a));
    if (f == Format::json) {
      nlohmann::json j = nlohmann::json::parse(trace_to_json(res.trace));
      j["identity"] = res.identity.approx;
      if (res.row) j["exact_sequence_row"] = res.row->to_string();
      out << j.dump(2) << "\n";
    } else {
      out << trace_to_text(res.trace, a.depth.value_or(100));
      out << "verdict: " << to_string(res.trace.verdict) << "\n";
    }
    return res.trace.verdict == Verdict::contradiction ? kExitContradiction : kExitOk;
  }
  std::vector<Trace> traces;
  if (a.all) {
    if (!a.cls.name.empty()) throw Error(ErrorCode::InvalidInput, "--all-classes excludes --class");
    traces = verify_all_classes(opt);
  } else {
    if (a.cls.name.empty()) throw Error(ErrorCode::InvalidInput, "--single needs --all-classes or --class");
    if (parse_class_name(a.cls.name) == CGClass::CG7 && a.cls.sigma.empty()) {
      traces.push_back(verify_cg7_all(opt));
    } else {
      const PoincareClass c = build_class(a.cls);
      if (a.p) check_p(c, *a.p);
      traces.push_back(verify_single_geodesic(c, a.p, std::nullopt, opt));
    }
  }
  const bool all_refuted = std::all_of(traces.begin(), traces.end(), [](const Trace& t) { return t.refutes(); });
  if (f == Format::json) {
    nlohmann::json j;
    j["traces"] = nlohmann::json::array();
    for (const auto& t : traces) j["traces"].push_back(nlohmann::json::parse(trace_to_json(t)));
    if (a.all) j["summary"] = all_classes_summary(traces);
    out << j.dump(2) << "\n";
  } else {
    const int depth = a.depth.value_or(a.all ? 0 : 100);
    for (const auto& t : traces) out << trace_to_text(t, depth);
    if (a.all) out << all_classes_summary(traces) << "\n";
  }
  return all_refuted ? kExitContradiction : kExitOk;
}

struct FindArgs {
  std::string metric = "katok", format = "json";
  double epsilon = 0.0;
  int vertices = 40;
  double cap = 0.0;
  int samples = 200;
};

int cmd_find(const FindArgs& a, std::ostream& out) {
  const Format f = parse_format(a.format, {Format::text, Format::csv, Format::json});
  if (a.vertices < 8 || a.vertices > 2000) throw Error(ErrorCode::InvalidInput, "--vertices must lie in [8, 2000]");
  if (!(a.cap > 0.0)) throw Error(ErrorCode::InvalidInput, "--cap must be positive");
  if (a.samples < 2) throw Error(ErrorCode::InvalidInput, "--samples must be >= 2");
  MetricSpec metric;
  if (a.metric == "round") metric = MetricSpec::round();
  else if (a.metric == "katok") metric = MetricSpec::katok(katok_epsilon(a.epsilon));
  else throw Error(ErrorCode::InvalidInput, "unknown metric '" + a.metric + "'");
  metric.validate();
  std::vector<SeedFailure> failures;
  const auto recs = find_closed_geodesics(metric, a.vertices, a.cap, {}, &failures);
  if (f == Format::json) {
    out << records_to_json(metric, recs, a.samples) << "\n";
  } else {
    std::ostringstream os;
    os.precision(12);
    if (f == Format::csv) os << "length,energy,multiplicity,prime_length,index,nullspace_dim,trace,closure_residual\n";
    for (const auto& r : recs) {
      if (f == Format::csv) {
        os << r.length << ',' << r.energy << ',' << r.multiplicity << ',' << r.prime_length << ',' << r.measured_index
           << ',' << r.measured_nullspace_dim << ',' << r.poincare.trace() << ',' << r.closure_residual << '\n';
      } else {
        os << "L=" << r.length << " E=" << r.energy << " m=" << r.multiplicity << " index=" << r.measured_index
           << " null=" << r.measured_nullspace_dim << " trace=" << r.poincare.trace() << "\n";
      }
    }
    if (f == Format::text) {
      for (const auto& s : failures) os << "seed " << s.seed << ": " << s.reason << "\n";
    }
    out << os.str();
  }
  return kExitOk;
}

struct KatokArgs {
  double epsilon = 0.0;
  int vertices = 40, mcheck = 5;
  std::string format = "text";
};

int cmd_katok(const KatokArgs& a, std::ostream& out) {
  const Format f = parse_format(a.format, {Format::text, Format::json});
  if (a.epsilon < 0.0 || a.epsilon >= 1.0) throw Error(ErrorCode::InvalidInput, "--epsilon must lie in [0, 1)");
  if (a.vertices < 8 || a.vertices > 2000) throw Error(ErrorCode::InvalidInput, "--vertices must lie in [8, 2000]");
  if (a.mcheck < 1 || a.mcheck > 10) throw Error(ErrorCode::InvalidInput, "--mcheck must lie in [1, 10]");
  KatokOptions opt;
  opt.epsilon = a.epsilon;
  opt.vertices = a.vertices;
  opt.m_check = a.mcheck;
  const KatokReport rep = katok_report(opt);
  out << (f == Format::json ? rep.to_json() + "\n" : rep.to_text());
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"closed geodesics on Finsler two-spheres"};
  app.set_config("--config", "", "key = value file with option defaults");
  app.require_subcommand(1);

  ClassifyArgs ca;
  auto* classify_cmd = app.add_subcommand("classify", "class of a 2x2 symplectic matrix");
  classify_cmd->add_option("--matrix", ca.matrix, "a,b,c,d row major")->required();
  classify_cmd->add_option("--eig-tol", ca.eig_tol);
  classify_cmd->add_option("--max-den", ca.max_den, "enable rational rotation detection");
  classify_cmd->add_option("--format", ca.format);

  IterateArgs ia;
  auto* iterate_cmd = app.add_subcommand("iterate", "index and nullity of iterates");
  add_class_options(iterate_cmd, ia.cls, true);
  iterate_cmd->add_option("--p", ia.p);
  iterate_cmd->add_option("--mmax", ia.mmax);
  iterate_cmd->add_option("--format", ia.format);

  MorseArgs ma;
  auto* morse_cmd = app.add_subcommand("morse", "Morse type numbers and inequalities");
  add_class_options(morse_cmd, ma.cls, false);
  morse_cmd->add_option("--p", ma.p);
  morse_cmd->add_flag("--katok", ma.katok, "the two equators of the Katok metric");
  morse_cmd->add_option("--epsilon", ma.epsilon);
  morse_cmd->add_option("--kmax", ma.kmax);
  morse_cmd->add_option("--format", ma.format);

  VerifyArgs va;
  auto* verify_cmd = app.add_subcommand("verify", "case analysis and consistency checks");
  verify_cmd->add_flag("--single", va.single);
  verify_cmd->add_flag("--multi", va.multi);
  verify_cmd->add_flag("--all-classes", va.all);
  verify_cmd->add_flag("--katok", va.katok);
  add_class_options(verify_cmd, va.cls, false);
  verify_cmd->add_option("--p", va.p);
  verify_cmd->add_option("--khat1", va.khat1, "khat_1(c^n) of a CG-7 saddle (multi mode)");
  verify_cmd->add_option("--epsilon", va.epsilon);
  verify_cmd->add_option("--records", va.records, "records file written by find");
  verify_cmd->add_option("--depth", va.depth, "text rendering depth");
  verify_cmd->add_option("--max-den", va.max_den, "largest CG-7 denominator enumerated");
  verify_cmd->add_option("--format", va.format);

  FindArgs fa;
  auto* find_cmd = app.add_subcommand("find", "closed geodesics below an energy cap");
  find_cmd->add_option("--metric", fa.metric);
  find_cmd->add_option("--epsilon", fa.epsilon);
  find_cmd->add_option("--vertices", fa.vertices);
  find_cmd->add_option("--cap", fa.cap)->required();
  find_cmd->add_option("--samples", fa.samples, "curve samples per record in json");
  find_cmd->add_option("--format", fa.format);

  KatokArgs ka;
  auto* katok_cmd = app.add_subcommand("katok-report", "end-to-end run on the Katok metric");
  katok_cmd->add_option("--epsilon", ka.epsilon);
  katok_cmd->add_option("--vertices", ka.vertices);
  katok_cmd->add_option("--mcheck", ka.mcheck);
  katok_cmd->add_option("--format", ka.format);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  try {
    if (*classify_cmd) return cmd_classify(ca, out);
    if (*iterate_cmd) return cmd_iterate(ia, out);
    if (*morse_cmd) return cmd_morse(ma, out);
    if (*verify_cmd) return cmd_verify(va, out);
    if (*find_cmd) return cmd_find(fa, out);
    if (*katok_cmd) return cmd_katok(ka, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace finsler
