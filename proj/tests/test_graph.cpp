#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "edgeshap/comp_graph.hpp"
#include "edgeshap/graph.hpp"
#include "edgeshap/tensor_archive.hpp"

namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;
using edgeshap::Edge;
using edgeshap::Graph;
using edgeshap::NodeId;

namespace {

// Scratch directory, removed when the test ends.
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("edgeshap_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<NodeId> to_vec(std::span<const NodeId> s) {
  return {s.begin(), s.end()};
}

}  // namespace

TEST_CASE("adjacency is sorted and symmetric for undirected input", "[graph]") {
  Graph g = Graph::from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {0, 4}}, true);
  REQUIRE(g.num_nodes() == 5);
  REQUIRE(g.num_edges() == 8);
  REQUIRE(to_vec(g.out_neighbors(0)) == std::vector<NodeId>{1, 4});
  REQUIRE(to_vec(g.in_neighbors(0)) == std::vector<NodeId>{1, 4});
  REQUIRE(to_vec(g.out_neighbors(1)) == std::vector<NodeId>{0, 2});
  REQUIRE(g.in_degree(2) == 2);
  REQUIRE(g.out_degree(3) == 1);
  REQUIRE(to_vec(g.out_neighbors(3)) == std::vector<NodeId>{2});

  std::vector<Edge> edges = g.edges();
  REQUIRE(edges.size() == 8);
  REQUIRE(std::is_sorted(edges.begin(), edges.end(),
                         [](const Edge& a, const Edge& b) {
                           return a.src != b.src ? a.src < b.src
                                                 : a.dst < b.dst;
                         }));
}

TEST_CASE("directed input is stored as given", "[graph]") {
  Graph g = Graph::from_edges(3, {{0, 1}, {1, 2}, {2, 0}}, false);
  REQUIRE(g.num_edges() == 3);
  REQUIRE(g.in_degree(0) == 1);
  REQUIRE(g.out_degree(0) == 1);
  REQUIRE(to_vec(g.in_neighbors(1)) == std::vector<NodeId>{0});
}

TEST_CASE("graph construction rejects malformed edges", "[graph]") {
  REQUIRE_THROWS_WITH(Graph::from_edges(2, {{0, 2}}, false),
                      ContainsSubstring("out of range"));
  REQUIRE_THROWS_WITH(Graph::from_edges(2, {{1, 1}}, false),
                      ContainsSubstring("self-loop"));
  REQUIRE_THROWS_WITH(Graph::from_edges(3, {{0, 1}, {0, 1}}, false),
                      ContainsSubstring("duplicate"));
  // An undirected edge listed in both orientations collides with its own
  // generated reversal.
  REQUIRE_THROWS_WITH(Graph::from_edges(3, {{0, 1}, {1, 0}}, true),
                      ContainsSubstring("duplicate"));
}

TEST_CASE("edge lists round-trip through text files", "[graph]") {
  TempDir tmp;
  Graph g = Graph::from_edges(6, {{0, 1}, {1, 2}, {4, 3}, {5, 0}}, true);
  edgeshap::save_edge_list(g, tmp.file("g.txt"));
  Graph back = edgeshap::load_edge_list(tmp.file("g.txt"), true);
  REQUIRE(back.num_nodes() == 6);
  REQUIRE(back.num_edges() == g.num_edges());
  REQUIRE(back.edges() == g.edges());
}

TEST_CASE("trailing isolated nodes survive a round trip", "[graph]") {
  TempDir tmp;
  // Node 7 appears in no edge; only the written node-count header can
  // preserve it.
  Graph g = Graph::from_edges(8, {{0, 1}, {2, 3}}, true);
  edgeshap::save_edge_list(g, tmp.file("iso.txt"));
  Graph back = edgeshap::load_edge_list(tmp.file("iso.txt"), true);
  REQUIRE(back.num_nodes() == 8);
  REQUIRE(back.edges() == g.edges());

  // An explicit count from the caller wins over the header.
  Graph wider = edgeshap::load_edge_list(tmp.file("iso.txt"), true, 9);
  REQUIRE(wider.num_nodes() == 9);

  // Files without the header keep the inferred count.
  write_text(tmp.file("plain.txt"), "0 1\n2 3\n");
  REQUIRE(edgeshap::load_edge_list(tmp.file("plain.txt"), true).num_nodes() ==
          4);
}

TEST_CASE("edge list files tolerate comments and blank lines", "[graph]") {
  TempDir tmp;
  write_text(tmp.file("g.txt"),
             "# a comment line\n"
             "\n"
             "0 1   # trailing comment\n"
             "  1\t2\r\n"
             "\n");
  Graph g = edgeshap::load_edge_list(tmp.file("g.txt"), true);
  REQUIRE(g.num_nodes() == 3);
  REQUIRE(g.num_edges() == 4);
}

TEST_CASE("edge list errors carry the file name and line number", "[graph]") {
  TempDir tmp;
  const std::string path = tmp.file("bad.txt");

  write_text(path, "0 1\nseven 8\n");
  REQUIRE_THROWS_WITH(edgeshap::load_edge_list(path, true),
                      ContainsSubstring("bad.txt:2: expected two integer"));

  write_text(path, "0 1 2\n");
  REQUIRE_THROWS_WITH(edgeshap::load_edge_list(path, true),
                      ContainsSubstring(":1: trailing characters"));

  write_text(path, "0 -1\n");
  REQUIRE_THROWS_WITH(edgeshap::load_edge_list(path, true),
                      ContainsSubstring(":1: negative node id"));

  write_text(path, "0 1\n1 7\n");
  REQUIRE_THROWS_WITH(edgeshap::load_edge_list(path, true, 4),
                      ContainsSubstring(":2: node id out of range"));

  write_text(path, "3 3\n");
  REQUIRE_THROWS_WITH(edgeshap::load_edge_list(path, true),
                      ContainsSubstring(":1: self-loop at node 3"));

  write_text(path, "0 1\n1 0\n");
  REQUIRE_THROWS_WITH(edgeshap::load_edge_list(path, true),
                      ContainsSubstring(":2: duplicate edge"));
  // The same two lines are fine when edges are directed.
  REQUIRE(edgeshap::load_edge_list(path, false).num_edges() == 2);

  REQUIRE_THROWS_WITH(edgeshap::load_edge_list(tmp.file("missing.txt"), true),
                      ContainsSubstring("cannot open"));
}

TEST_CASE("an empty edge list yields an empty graph", "[graph]") {
  TempDir tmp;
  write_text(tmp.file("empty.txt"), "# nothing here\n");
  Graph g = edgeshap::load_edge_list(tmp.file("empty.txt"), true);
  REQUIRE(g.num_nodes() == 0);
  REQUIRE(g.num_edges() == 0);
}

TEST_CASE("computational graph extraction keeps reachable messages only",
          "[graph]") {
  // 0-1-2-3 path plus a 0-4 spur. With two layers, messages must reach a
  // node at distance <= 1 from the target; edge 3->2 is one hop too far.
  Graph g = Graph::from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {0, 4}}, true);
  edgeshap::CompGraph comp = edgeshap::extract_pruned(g, 0, 2);

  REQUIRE(comp.target == 0);
  REQUIRE(comp.local_to_global == std::vector<NodeId>{0, 1, 2, 4});
  REQUIRE(comp.num_players() == 5);
  REQUIRE(comp.one_hop_count == 2);

  std::vector<Edge> globals;
  for (int i = 0; i < comp.num_players(); ++i)
    globals.push_back(comp.player_global(i));
  REQUIRE(globals == std::vector<Edge>{{1, 0}, {4, 0}, {0, 1}, {2, 1}, {0, 4}});

  // The first one_hop_count players are exactly those entering the target.
  for (int i = 0; i < comp.num_players(); ++i) {
    bool hits_target = comp.players[i].dst == 0;
    REQUIRE(hits_target == (i < comp.one_hop_count));
  }

  REQUIRE(comp.frozen_degrees ==
          std::vector<double>{3.0, 3.0, 3.0, 2.0});
}

TEST_CASE("one-layer extraction keeps only edges into the target", "[graph]") {
  Graph g = Graph::from_edges(4, {{0, 1}, {1, 2}, {2, 3}}, true);
  edgeshap::CompGraph comp = edgeshap::extract_pruned(g, 1, 1);
  REQUIRE(comp.num_players() == 2);
  REQUIRE(comp.one_hop_count == 2);
  std::vector<Edge> globals;
  for (int i = 0; i < comp.num_players(); ++i)
    globals.push_back(comp.player_global(i));
  REQUIRE(globals == std::vector<Edge>{{0, 1}, {2, 1}});
}

TEST_CASE("pruning statistics compare the naive receptive field", "[graph]") {
  Graph g = Graph::from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {0, 4}}, true);
  edgeshap::ReductionStats stats = edgeshap::count_reduction(g, 0, 2);
  REQUIRE(stats.full_edges == 6);
  REQUIRE(stats.pruned_players == 5);
  REQUIRE_THAT(stats.percent_reduction,
               Catch::Matchers::WithinAbs(100.0 * (1.0 - 5.0 / 6.0), 1e-12));
}

TEST_CASE("isolated targets have no players", "[graph]") {
  Graph g = Graph::from_edges(3, {{0, 1}}, true);
  edgeshap::CompGraph comp = edgeshap::extract_pruned(g, 2, 2);
  REQUIRE(comp.num_players() == 0);
  REQUIRE(comp.num_local_nodes() == 1);
  REQUIRE_THROWS_WITH(edgeshap::extract_pruned(g, 7, 2),
                      ContainsSubstring("out of range"));
}

TEST_CASE("tensor archives round-trip bit patterns exactly", "[graph]") {
  TempDir tmp;
  const float qnan = std::numeric_limits<float>::quiet_NaN();
  const float inf = std::numeric_limits<float>::infinity();
  std::vector<float> f32 = {0.0f, -0.0f, 1.5f, -3.25e-40f, qnan, inf};

  edgeshap::TensorArchive archive;
  archive.add(edgeshap::Tensor::f32("weird", {2, 3}, f32));
  {
    edgeshap::Tensor t("doubles", edgeshap::DType::kF64, {3});
    double vals[3] = {1.0 / 3.0, -0.0, 1e308};
    std::memcpy(t.data(), vals, sizeof(vals));
    archive.add(std::move(t));
  }
  {
    edgeshap::Tensor t("ids", edgeshap::DType::kI64, {2, 2});
    std::int64_t vals[4] = {-1, 0, 42, std::numeric_limits<std::int64_t>::max()};
    std::memcpy(t.data(), vals, sizeof(vals));
    archive.add(std::move(t));
  }

  edgeshap::save_tensor_archive(archive, tmp.file("a.gta"));
  edgeshap::TensorArchive back =
      edgeshap::load_tensor_archive(tmp.file("a.gta"));

  REQUIRE(back.size() == 3);
  // Order is preserved, not just membership.
  REQUIRE(back.at(0).name() == "weird");
  REQUIRE(back.at(1).name() == "doubles");
  REQUIRE(back.at(2).name() == "ids");

  const edgeshap::Tensor& w = back.get("weird");
  REQUIRE(w.dims() == std::vector<std::uint64_t>{2, 3});
  REQUIRE(std::memcmp(w.data(), f32.data(), sizeof(float) * f32.size()) == 0);
  REQUIRE(back.get("ids").as_i64()[3] ==
          std::numeric_limits<std::int64_t>::max());
  REQUIRE(std::memcmp(back.get("doubles").data(), archive.get("doubles").data(),
                      3 * sizeof(double)) == 0);

  // A second save produces byte-identical output.
  edgeshap::save_tensor_archive(back, tmp.file("b.gta"));
  REQUIRE(read_bytes(tmp.file("a.gta")) == read_bytes(tmp.file("b.gta")));
}

TEST_CASE("tensor archives reject duplicates and wrong dtypes", "[graph]") {
  edgeshap::TensorArchive archive;
  archive.add(edgeshap::Tensor::f32("x", {1}, std::vector<float>{1.0f}));
  REQUIRE_THROWS_WITH(
      archive.add(edgeshap::Tensor::f32("x", {1}, std::vector<float>{2.0f})),
      ContainsSubstring("duplicate tensor name 'x'"));
  REQUIRE_THROWS_WITH(archive.get("y"), ContainsSubstring("missing tensor"));
  REQUIRE_THROWS_WITH(archive.get("x").as_f64(),
                      ContainsSubstring("expected f64"));
  REQUIRE_THROWS_AS(archive.get("x").expect_dims({2}), edgeshap::Error);
  archive.get("x").expect_dims({-1});
}

TEST_CASE("malformed archive files fail with a named reason", "[graph]") {
  TempDir tmp;
  edgeshap::TensorArchive archive;
  archive.add(edgeshap::Tensor::f32("x", {2, 2},
                                    std::vector<float>{1, 2, 3, 4}));
  edgeshap::save_tensor_archive(archive, tmp.file("good.gta"));
  const std::string bytes = read_bytes(tmp.file("good.gta"));

  SECTION("bad magic") {
    std::string bad = bytes;
    bad[0] = 'X';
    write_bytes(tmp.file("bad.gta"), bad);
    REQUIRE_THROWS_WITH(edgeshap::load_tensor_archive(tmp.file("bad.gta")),
                        ContainsSubstring("magic"));
  }
  SECTION("unknown dtype") {
    // layout: 4 magic + 4 count + 4 name length + 1 name byte, then dtype.
    std::string bad = bytes;
    bad[13] = 9;
    write_bytes(tmp.file("bad.gta"), bad);
    REQUIRE_THROWS_AS(edgeshap::load_tensor_archive(tmp.file("bad.gta")),
                      edgeshap::Error);
  }
  SECTION("truncation anywhere fails") {
    for (std::size_t cut : {2u, 6u, 10u, 13u, 16u, 20u}) {
      write_bytes(tmp.file("cut.gta"), bytes.substr(0, cut));
      REQUIRE_THROWS_AS(edgeshap::load_tensor_archive(tmp.file("cut.gta")),
                        edgeshap::Error);
    }
    write_bytes(tmp.file("cut.gta"), bytes.substr(0, bytes.size() - 1));
    REQUIRE_THROWS_AS(edgeshap::load_tensor_archive(tmp.file("cut.gta")),
                      edgeshap::Error);
  }
  SECTION("missing file") {
    REQUIRE_THROWS_WITH(edgeshap::load_tensor_archive(tmp.file("no.gta")),
                        ContainsSubstring("cannot open"));
  }
}

TEST_CASE("feature matrices save and load through archives", "[graph]") {
  TempDir tmp;
  edgeshap::FeatureMatrix feats(3, 2);
  for (NodeId v = 0; v < 3; ++v)
    for (int j = 0; j < 2; ++j) feats.row(v)[j] = static_cast<float>(10 * v + j);
  edgeshap::save_features(feats, tmp.file("x.gta"));
  edgeshap::FeatureMatrix back = edgeshap::load_features(tmp.file("x.gta"));
  REQUIRE(back.num_nodes() == 3);
  REQUIRE(back.dim() == 2);
  REQUIRE(back.row(2)[1] == 21.0f);

  // Wrong tensor name is rejected.
  edgeshap::TensorArchive archive;
  archive.add(edgeshap::Tensor::f32("y", {3, 2},
                                    std::vector<float>(6, 0.0f)));
  edgeshap::save_tensor_archive(archive, tmp.file("y.gta"));
  REQUIRE_THROWS_WITH(edgeshap::load_features(tmp.file("y.gta")),
                      ContainsSubstring("missing tensor 'x'"));
}
