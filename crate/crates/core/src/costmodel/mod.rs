//! Component cost tables, digital CiM and ADC energy models, and run reports.

mod energy;
mod report;
mod table;

pub use energy::{
    adc_baseline_cost, analytic_counters, dcim_energy, AdcCost, DcimEnergyParams, REFERENCE_STEPS,
};
pub use report::{
    check_csv_totals, derived_metrics, normalize, ComponentCost, CsvRow, DerivedMetrics, LayerReport, RunReport,
    Totals, TOTAL_LABEL,
};
pub use table::{adc_entry_name, CostEntry, CostTable};
