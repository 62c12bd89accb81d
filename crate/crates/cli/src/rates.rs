use std::fs;

use cvlab_core::analysis::rate_estimate;
use cvlab_core::dgp::{Dgp, MeanFn, XLaw};

use crate::{read_learner, with_workers, CliResult, RatesArgs};

pub(crate) fn rates(args: &RatesArgs) -> CliResult<()> {
    let spec = read_learner(&args.learner)?;
    let dgp = Dgp::new(args.p, MeanFn::preset(&args.dgp, args.p)?, 1.0, XLaw::StandardNormal)?;
    let report = with_workers(args.workers, || {
        rate_estimate(&spec, &dgp, &args.n, args.reps, args.seed, args.mc_draws)
    })??;
    print!("{report}");
    println!("gamma_hat = {:.4} +/- {:.4}", report.gamma_hat, report.gamma_se);
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("rates.txt"), report.to_string())?;
        let mut buf = Vec::new();
        report.write_csv(&mut buf)?;
        fs::write(dir.join("rates.csv"), buf)?;
    }
    Ok(())
}
