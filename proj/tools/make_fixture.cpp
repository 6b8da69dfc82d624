#include <iostream>

#include "CLI11.hpp"
#include "fixture.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Writes a synthetic dataset, embeddings and type vectors with planted structure"};
  orthovar::fixture::FixtureOptions o;
  std::filesystem::path dir;
  std::vector<std::string> extra_models;
  app.add_option("dir", dir, "Output directory")->required();
  app.add_option("--datapoints", o.datapoints)->capture_default_str();
  app.add_option("--dim", o.dim)->capture_default_str();
  app.add_option("--tags", o.tags)->capture_default_str();
  app.add_option("--noise-ratio", o.noise_ratio)->capture_default_str();
  app.add_option("--seed", o.seed)->capture_default_str();
  app.add_option("--model", o.model_id)->capture_default_str();
  app.add_option("--extra-model", extra_models, "Additional model ids (embeddings only)");
  CLI11_PARSE(app, argc, argv);

  const auto paths = orthovar::fixture::write_fixture(dir, o);
  std::cout << paths.dataset.string() << '\n' << paths.embeddings.string() << '\n' << paths.type_vectors.string() << '\n';
  for (std::size_t i = 0; i < extra_models.size(); ++i) {
    auto m = o;
    m.model_id = extra_models[i];
    std::cout << orthovar::fixture::write_fixture_embeddings(dir, m).string() << '\n';
  }
  return 0;
}
