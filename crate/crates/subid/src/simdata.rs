pub struct DataSet;
