//! Benchmarks of the hot kernels: orbital propagation, margin evaluation,
//! Doppler extrema search, and the receiver DSP stages.

use criterion::{criterion_group, criterion_main, Criterion};
use oisl_core::catalogue::builtin_shell;
use oisl_core::dsp::bps::bps;
use oisl_core::dsp::cfe::coarse_cfe;
use oisl_core::dsp::equalizer::{equalize, EqualizerConfig};
use oisl_core::dsp::rrc::pulse_shape_rrc;
use oisl_core::dsp::symbols::generate_symbols;
use oisl_core::dsp::ComplexFrame;
use oisl_core::doppler::extrema_search;
use oisl_core::linkfeas::{
    feasibility_table, margin_cell_from_distance, scheme_by_label, LinkParams, ModulationFormat,
    NoiseRegime,
};
use oisl_core::orbital::{satellite_state, SatelliteIndex, Topology};
use std::hint::black_box;

const SYMBOL_RATE: f64 = 32e9;
const N_SYMBOLS: usize = 16_384;

/// Oversampled dual-polarization QPSK test frame (2 samples/symbol).
fn test_frame() -> ComplexFrame {
    let (x, y) = generate_symbols(ModulationFormat::Qpsk, N_SYMBOLS, 7).unwrap();
    pulse_shape_rrc(&x, &y, SYMBOL_RATE, 2, 64, 0.1).unwrap()
}

/// Symbol-rate frame for the symbol-domain stages.
fn symbol_frame() -> ComplexFrame {
    let (x, y) = generate_symbols(ModulationFormat::Qpsk, N_SYMBOLS, 7).unwrap();
    ComplexFrame {
        x,
        y,
        sample_rate_hz: SYMBOL_RATE,
        samples_per_symbol: 1,
    }
}

fn bench_orbital(c: &mut Criterion) {
    let shell = &builtin_shell("A1").unwrap().shell;
    c.bench_function("orbital/satellite_state", |b| {
        b.iter(|| satellite_state(black_box(shell), SatelliteIndex::new(3, 5), black_box(123.4)))
    });
}

fn bench_linkfeas(c: &mut Criterion) {
    let params = LinkParams::default();
    let scheme = scheme_by_label("100G").unwrap();
    c.bench_function("linkfeas/margin_cell", |b| {
        b.iter(|| {
            margin_cell_from_distance(
                black_box(1.5e6),
                &scheme,
                NoiseRegime::default_shot(),
                &params,
            )
        })
    });
    let mut slow = c.benchmark_group("linkfeas");
    slow.sample_size(10);
    slow.bench_function("feasibility_table_shot", |b| {
        b.iter(|| feasibility_table(NoiseRegime::default_shot(), black_box(&params)))
    });
    slow.finish();
}

fn bench_doppler(c: &mut Criterion) {
    let shell = &builtin_shell("A1").unwrap().shell;
    let mut g = c.benchmark_group("doppler");
    g.sample_size(10);
    g.bench_function("extrema_search_k2k", |b| {
        b.iter(|| extrema_search(black_box(shell), Topology::InterorbitalKToK, 1550e-9))
    });
    g.finish();
}

fn bench_dsp(c: &mut Criterion) {
    let frame = test_frame();
    let symbols = symbol_frame();
    let mut g = c.benchmark_group("dsp");
    g.sample_size(20);
    g.bench_function("coarse_cfe_32k", |b| {
        b.iter(|| coarse_cfe(black_box(&frame), 17e9, 1024))
    });
    let eq_cfg = EqualizerConfig::for_format(ModulationFormat::Qpsk, 21, 2000);
    g.bench_function("equalize_16k", |b| {
        b.iter(|| equalize(black_box(&frame), &eq_cfg))
    });
    g.bench_function("bps_16k", |b| {
        b.iter(|| bps(black_box(&symbols), ModulationFormat::Qpsk, 40, 30))
    });
    g.finish();
}

criterion_group!(benches, bench_orbital, bench_linkfeas, bench_doppler, bench_dsp);
criterion_main!(benches);
