#include <benchmark/benchmark.h>

#include "pqproj/catalog.hpp"
#include "pqproj/integrals.hpp"
#include "pqproj/sampling.hpp"

using namespace pqproj;

namespace {

const CatalogEntry& sphere() {
    static const CatalogEntry e = make_sphere_projective_pair(Vector{{1.0, 2.0, 3.0}}.asDiagonal().toDenseMatrix());
    return e;
}

const CatalogEntry& dini() {
    static const CatalogEntry e = make_dini_pair();
    return e;
}

void BM_ParseSphereGbar(benchmark::State& state) {
    const auto& spec = sphere().scene.spec();
    for (auto _ : state) benchmark::DoNotOptimize(parse_expr(spec.gbar[0][0], spec.coords));
}
BENCHMARK(BM_ParseSphereGbar);

void BM_EvalJetSphereGbar(benchmark::State& state) {
    const auto& spec = sphere().scene.spec();
    const ScalarExpr e = parse_expr(spec.gbar[0][0], spec.coords);
    const Vector x = sphere().scene.chart().center();
    for (auto _ : state) benchmark::DoNotOptimize(eval_jet(e, x));
}
BENCHMARK(BM_EvalJetSphereGbar);

void BM_ResidualMain(benchmark::State& state) {
    const PQScene& s = state.range(0) == 0 ? dini().scene : sphere().scene;
    const Vector x = s.chart().center();
    for (auto _ : state) benchmark::DoNotOptimize(residual_at(s, Equation::main, x));
}
BENCHMARK(BM_ResidualMain)->Arg(0)->Arg(1);

void BM_Decompose(benchmark::State& state) {
    const PQScene& s = sphere().scene;
    const Vector x = s.chart().center();
    const Matrix g = s.g().value_at(x);
    const Matrix A = compute_A_at(s, x);
    for (auto _ : state) benchmark::DoNotOptimize(decompose(g, A));
}
BENCHMARK(BM_Decompose);

void BM_GeodesicUnitTime(benchmark::State& state) {
    const PQScene& s = dini().scene;
    const GeodesicState init{Vector{{0.5, 1.5}}, Vector{{0.3, 0.2}}};
    for (auto _ : state) benchmark::DoNotOptimize(integrate_geodesic(s.g(), s.chart(), init, 1.0, 1e-3));
}
BENCHMARK(BM_GeodesicUnitTime)->Unit(benchmark::kMillisecond);

void BM_ConservationFiveIntegrals(benchmark::State& state) {
    const PQScene& s = dini().scene;
    const Trajectory t = integrate_geodesic(s.g(), s.chart(), GeodesicState{Vector{{0.5, 1.5}}, Vector{{0.3, 0.2}}},
                                            1.0, 1e-3);
    const std::vector<IntegralSpec> specs{{0.5}, {2.5}, {5.0}, {-1.0}, {6.0}};
    for (auto _ : state) benchmark::DoNotOptimize(conservation_report(s, t, specs));
}
BENCHMARK(BM_ConservationFiveIntegrals)->Unit(benchmark::kMillisecond);

}  // namespace

// The packaged benchmark_main archive is LTO bytecode from another compiler release.
BENCHMARK_MAIN();
