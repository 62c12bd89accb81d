use std::fs::File;
use std::io::BufReader;

use cvlab_core::dgp::{Dgp, MeanFn, XLaw};
use cvlab_core::rng::{self, stream};
use cvlab_core::{decompose as decompose_cv, make_folds, CvDecomposition, Dataset, LearnerSpec};

use crate::{read_learner, CliError, CliResult, DecomposeArgs};

/// The library computation behind `cvlab decompose`: folds from stream
/// `FOLDS` of `seed`, fits from stream `CV_FITS`, as in a run's cell.
pub fn decompose_row(
    data: &Dataset,
    spec: &LearnerSpec,
    k: usize,
    seed: u64,
    mu: &str,
) -> cvlab_core::Result<CvDecomposition> {
    let dgp = Dgp::new(data.p(), MeanFn::preset(mu, data.p())?, 1.0, XLaw::StandardNormal)?;
    let learner = spec.build(&dgp)?;
    let folds = make_folds(data.n(), k, rng::derive(seed, stream::FOLDS))?;
    decompose_cv(
        learner.as_ref(),
        data,
        &folds,
        &|x| dgp.mu(x),
        rng::derive(seed, stream::CV_FITS),
    )
}

pub(crate) fn decompose(args: &DecomposeArgs) -> CliResult<()> {
    let file = File::open(&args.data)
        .map_err(|e| CliError::usage(format!("cannot read dataset {}: {e}", args.data.display())))?;
    let data = Dataset::read_csv(BufReader::new(file))
        .map_err(|e| CliError::usage(format!("{}: {e}", args.data.display())))?;
    let spec = read_learner(&args.learner)?;
    let d = decompose_row(&data, &spec, args.k, args.seed, &args.mu)?;

    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(CvDecomposition::CSV_HEADER)
            .and_then(|_| w.write_record(d.csv_record(0, &spec.label(), data.n(), args.k)))
            .and_then(|_| w.flush().map_err(csv::Error::from))
            .map_err(|e| CliError::runtime(e.to_string()))?;
    }
    print!("{}", String::from_utf8_lossy(&buf));
    if let Some(path) = &args.out {
        std::fs::write(path, &buf)?;
    }
    Ok(())
}
