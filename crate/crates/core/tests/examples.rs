// Every example is compiled into this test and run once.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/examples/",
                stringify!($name),
                ".rs"
            ));
        }

        #[test]
        fn $name() {
            $name::run().expect(concat!(stringify!($name), " should run"));
        }
    };
}

example!(thermal_profile);
example!(iv_curves);
example!(array_mismatch);
example!(charger_window);
example!(inor_vs_oracle);
example!(mlr_forecast);
example!(dnor_drive);
example!(compare_schemes);
example!(runtime_scaling);
