#include "ctkg/cli.hpp"

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ctkg/error.hpp"
#include "ctkg/optimizer.hpp"
#include "ctkg/query.hpp"
#include "ctkg/service.hpp"
#include "ctkg/store.hpp"

namespace ctkg {

namespace {

using nlohmann::json;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  json doc = json::parse(read_text(path), nullptr, false);
  if (doc.is_discarded()) throw Error(Errc::MalformedDocument, path + " is not valid JSON");
  return doc;
}

void emit(const json& doc, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << doc.dump() << "\n";
    return;
  }
  std::ofstream file(out_path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(Errc::IoError, "cannot write " + out_path);
  file << doc.dump() << "\n";
  if (!file.flush()) throw Error(Errc::IoError, "cannot write " + out_path);
}

std::string require_store(const std::string& store) {
  if (store.empty()) throw Error(Errc::Usage, "no store given (use --store or CTKG_STORE)");
  return store;
}

// Blocks until SIGINT or SIGTERM, then stops the service.
void serve_until_signal(Service& service, std::ostream& out) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    service.stop();
  });
  out << json{{"listening", service.port()}}.dump() << std::endl;
  service.run();
  // run() also returns if the listener fails; wake the waiter in that case.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cognitive twin knowledge-graph engine", "ctkg"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string store_dir;
  app.add_option("--store", store_dir, "Store directory")->envname("CTKG_STORE");

  std::string init_dir;
  auto* init = app.add_subcommand("init", "Create an empty store");
  init->add_option("dir", init_dir, "Directory")->required();

  std::string import_file;
  auto* import = app.add_subcommand("import", "Merge an interchange document into the store");
  import->add_option("file", import_file, "Interchange document")->required();

  auto* exporter = app.add_subcommand("export", "Print the store as an interchange document");

  std::string query_text;
  auto* query = app.add_subcommand("query", "Evaluate a topology query");
  query->add_option("-e,--expr", query_text, "Query text")->required();

  std::string model_id;
  std::int64_t t_from = 0, t_to = 0;
  auto* dynamics = app.add_subcommand("dynamics", "Version churn of a model over a timespot window");
  dynamics->add_option("--model", model_id, "Model URI")->required();
  dynamics->add_option("--from", t_from, "First timespot")->required();
  dynamics->add_option("--to", t_to, "Last timespot")->required();

  std::string process_ref, out_path;
  std::optional<double> step, horizon;
  std::optional<std::int64_t> seed;
  auto* sim = app.add_subcommand("simulate", "Simulate a stored process");
  sim->add_option("--process", process_ref, "Process URI")->required();
  sim->add_option("--step", step, "Sampling step");
  sim->add_option("--seed", seed, "Seed");
  sim->add_option("--horizon", horizon, "Horizon");
  sim->add_option("--out", out_path, "Trace file");

  std::string job_file;
  unsigned threads = 1;
  auto* opt = app.add_subcommand("optimize", "Optimize process parameters");
  opt->add_option("--job", job_file, "Job file")->required();
  opt->add_option("--out", out_path, "Result file");
  opt->add_option("--threads", threads, "Parallel candidate evaluations");

  int port = 0;
  std::string host = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--port", port, "TCP port")->required();
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--store", store_dir, "Store directory");

  std::vector<const char*> argv{"ctkg"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << Error(Errc::Usage, e.what()).to_json().dump() << "\n";
    return kExitUsage;
  }

  try {
    if (*init) {
      Store::init(init_dir);
      out << json{{"store", init_dir}}.dump() << "\n";
    } else if (*import) {
      Store store(require_store(store_dir), Store::Mode::Write);
      emit(store.mutate("import", {{"document", read_json(import_file)}}), "", out);
    } else if (*exporter) {
      Store store(require_store(store_dir), Store::Mode::Read);
      emit(store.read([](const StoreState& s) { return serialize(s); }), "", out);
    } else if (*query) {
      Query q = parse_query(query_text);
      Store store(require_store(store_dir), Store::Mode::Read);
      emit(store.read([&](const StoreState& s) { return to_json(evaluate(s.graph, q)); }), "", out);
    } else if (*dynamics) {
      Store store(require_store(store_dir), Store::Mode::Read);
      emit(store.read([&](const StoreState& s) { return to_json(s.registry.evolution_dynamics(model_id, t_from, t_to)); }),
           "", out);
    } else if (*sim) {
      SimConfig config;
      if (step) config.step = *step;
      if (seed) config.seed = *seed;
      if (horizon) config.horizon = *horizon;
      Store store(require_store(store_dir), Store::Mode::Read);
      ProcessModel p = store.read([&](const StoreState& s) { return resolve_process(s, json(process_ref)); });
      emit(to_json(simulate(p, config)), out_path, out);
    } else if (*opt) {
      json job_doc = read_json(job_file);
      OptJob job = job_from_json(job_doc);
      const json* bindings = job_doc.contains("bindings") ? &job_doc["bindings"] : nullptr;
      Store store(require_store(store_dir), Store::Mode::Read);
      ProcessModel p = store.read(
          [&](const StoreState& s) { return resolve_process(s, json(job.process_ref), bindings ? *bindings : json()); });
      OptOptions options;
      options.threads = threads;
      emit(to_json(optimize(p, job.space, job.objective, job.budget, job.seed, job.config, options)), out_path, out);
    } else if (*serve) {
      Store store(require_store(store_dir), Store::Mode::Write);
      Service service(store);
      service.bind(host, port);
      serve_until_signal(service, out);
    }
  } catch (const Error& e) {
    err << e.to_json().dump() << "\n";
    return e.code() == Errc::ParseError || e.code() == Errc::Usage ? kExitUsage : kExitError;
  } catch (const json::exception& e) {
    err << Error(Errc::MalformedDocument, e.what()).to_json().dump() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    err << Error(Errc::IoError, e.what()).to_json().dump() << "\n";
    return kExitError;
  }
  return kExitOk;
}

}  // namespace ctkg
