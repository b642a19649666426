//! The whole harness end to end through the library API: generate data, sweep
//! a small grid, evaluate two solvers, and merge the reports — the same flow
//! the `ibench` binary drives from config files.
//!
//! ```bash
//! cargo run --example full_pipeline
//! ```

use inverse_bench::harness::{
    cmd_eval, cmd_gen_data, cmd_report, cmd_sweep, cmd_train, CliOptions, Config,
};

fn main() {
    let root = std::env::temp_dir().join(format!("ibench-pipeline-{}", std::process::id()));
    std::fs::create_dir_all(&root).unwrap();
    let cfg_text = format!(
        "[task]\nname = toy\n\
         [data]\npath = {data}\nn = 400\nseed = 17\nfractions = 0.7,0.2,0.1\n\
         [solver]\nkind = nn\nhidden = 24\nactivation = relu\nbatchnorm = false\n\
         epochs = 30\nbatch = 64\nlr = 3e-3\nseed = 9\niterations = 60\npopulation = 80\n\
         [sweep]\nlr = 1e-3,3e-3\nhidden = 16,24\n\
         [eval]\nt_max = 10\neval_seed = 505\n\
         [output]\ndir = {out}\n",
        data = root.join("toy.csv").display(),
        out = root.join("runs").display(),
    );
    let cfg = Config::parse(&cfg_text).unwrap();
    let opts = CliOptions { jobs: 2, ..CliOptions::default() };

    let data = cmd_gen_data(&cfg, &opts).unwrap();
    println!("dataset: {}", data.display());

    let sweep = cmd_sweep(&cfg, &opts).unwrap();
    println!("sweep: {} cells, best = cell-{:03}", sweep.records.len(), sweep.best_cell);
    for r in &sweep.records {
        println!("  {} val_r1 = {:.4e}", r.solver, r.val_r1);
    }

    let nn_report = cmd_eval(&cfg, &opts).unwrap();
    println!("nn eval: r1 = {:.4e}", nn_report.r1());

    // a second solver so the merged table has something to compare
    let mut ga_cfg = cfg.clone();
    ga_cfg.set("solver.kind=ga").unwrap();
    cmd_train(&ga_cfg, &opts).unwrap();
    let ga_report = cmd_eval(&ga_cfg, &opts).unwrap();
    println!(
        "ga eval: r1 = {:.4e}, r{} = {:.4e}",
        ga_report.r1(),
        ga_report.t_max,
        ga_report.r_t.last().unwrap()
    );

    let bundle = cmd_report(&cfg, &opts).unwrap();
    println!("\n{}", std::fs::read_to_string(&bundle.table_errors).unwrap());
    println!("full outputs in {}", root.display());
}
